import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from attofox.model import ModelParams, State, decay, decay_time

"""
The trajectory record shared by the jump, diffusion and deterministic integrators.
"""


class Termination(str, Enum):
    """
    Why a run stopped.
    """

    RAN_TO_HORIZON = 'ran-to-horizon'
    PREY_ABSORBED = 'prey-absorbed'
    PREDATOR_EXTINCT = 'predator-extinct'


@dataclass
class Trajectory(object):
    """
    States sampled on a time grid, the final state and the reason the run stopped.

    The diagnostics dict carries integrator specific extras such as extinction_time,
    absorption_time, absorption_y, clamp_count, events, captures and switches.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    termination: Termination = Termination.RAN_TO_HORIZON
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def final(self) -> State:
        return State(float(self.t[-1]), float(self.x[-1]), float(self.y[-1]))

    @property
    def extinction_time(self) -> float | None:
        return self.diagnostics.get('extinction_time')

    def states(self) -> list:
        return [State(float(t), float(x), float(y)) for t, x, y in zip(self.t, self.x, self.y)]

    def state_at(self, t: float) -> State:
        """
        The last recorded state at or before t; the final state once the run has ended.
        """
        index = int(np.searchsorted(self.t, t + 1e-12, side='right')) - 1
        index = min(max(index, 0), len(self.t) - 1)
        return State(float(self.t[index]), float(self.x[index]), float(self.y[index]))

    def to_frame(self, eps: float) -> pd.DataFrame:
        """
        The samples as a table with columns t, x, y and the log-chart abscissa xi.

        Parameters
        ----------
        eps: float
          The time scale ratio used for xi = eps ln(x); xi is NaN where x = 0.
        """
        with np.errstate(divide='ignore'):
            xi = np.where(self.x > 0, eps * np.log(np.where(self.x > 0, self.x, 1.0)), np.nan)
        return pd.DataFrame({'t': self.t, 'x': self.x, 'y': self.y, 'xi': xi})


class TrajectoryBuilder(object):
    """
    Stitches compiled integrator segments and analytic decay tails into one Trajectory.
    """

    def __init__(self, init: State, horizon: float, sample_stride: float):
        self.horizon = horizon
        self.sample_stride = sample_stride
        self.next_sample = init.t
        self.diagnostics = {}
        self._chunks = []

    def extend(self, t: np.ndarray, x: np.ndarray, y: np.ndarray, next_sample: float) -> None:
        if len(t):
            self._chunks.append((np.asarray(t), np.asarray(x), np.asarray(y)))
        self.next_sample = next_sample

    def decay_tail(self, params: ModelParams, t0: float, y0: float, grid_dt: float | None = None) -> tuple:
        """
        Finishes a run whose prey is gone: the predator decays in closed form.

        Parameters
        ----------
        params: ModelParams
          The model constants.
        t0: float
          The time the prey vanished.
        y0: float
          The predator concentration at t0.
        grid_dt: float | None
          When given, the extinction time is snapped up to this integrator grid.

        Returns
        -------
        A tuple of the final State and the Termination.
        """
        level = 1 / params.omega
        elapsed = decay_time(params, t0, y0, level)
        if grid_dt is not None and elapsed > 0:
            elapsed = math.ceil(elapsed / grid_dt - 1e-9) * grid_dt
        end = t0 + elapsed
        termination = Termination.PREDATOR_EXTINCT
        if end > self.horizon:
            end = self.horizon
            termination = Termination.PREY_ABSORBED
        else:
            self.diagnostics['extinction_time'] = end
        count = 0
        if self.next_sample <= end + 1e-12:
            count = int(math.floor((end - self.next_sample) / self.sample_stride + 1e-9)) + 1
        times = self.next_sample + self.sample_stride * np.arange(count)
        if count:
            ys = np.array([decay(params, t0, s, y0) for s in times])
            self.extend(times, np.zeros(count), ys, self.next_sample + count * self.sample_stride)
        final = State(end, 0.0, decay(params, t0, end, y0))
        return final, termination

    def build(self, final: State, termination: Termination) -> Trajectory:
        if self._chunks:
            t = np.concatenate([chunk[0] for chunk in self._chunks])
            x = np.concatenate([chunk[1] for chunk in self._chunks])
            y = np.concatenate([chunk[2] for chunk in self._chunks])
        else:
            t, x, y = np.empty(0), np.empty(0), np.empty(0)
        if not len(t) or final.t > t[-1] or (final.x, final.y) != (x[-1], y[-1]):
            t = np.append(t, final.t)
            x = np.append(x, final.x)
            y = np.append(y, final.y)
        return Trajectory(t, x, y, termination, dict(self.diagnostics))
