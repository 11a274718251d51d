import math
from dataclasses import dataclass

import numpy as np

from attofox import kernels
from attofox.context import context
from attofox.exceptions import (BudgetExceededError, ContractError, DegenerateRateError, NumericError,
                                ValidationError)
from attofox.model import ModelParams, State, total_event_rate
from attofox.trajectory import Termination, Trajectory, TrajectoryBuilder

"""
Exact event by event simulation of the prey birth and capture process.

The prey is a count n of individuals, x = n / omega; the predator stays a concentration that
decays exactly between two events and gains eps / omega on every capture.
"""

MASK = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """
    The splitmix64 finaliser, used to derive independent seeds from a master seed and a run index.
    """
    z = (value + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class RngStream(object):
    """
    A deterministic random stream built from a 64-bit seed.

    The wrapped numpy Generator is handed to the compiled kernels as is.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValidationError(f'Seeds must be nonnegative, received {seed}.')
        self.seed = int(seed) & MASK
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self) -> float:
        return float(self.generator.random())

    def normal(self) -> float:
        return float(self.generator.standard_normal())

    def spawn(self, index: int) -> 'RngStream':
        """
        The stream of run index of an ensemble, independent of the order runs are executed in.
        """
        return RngStream(self.seed ^ splitmix64(index))


@dataclass(frozen=True)
class JumpState(object):
    """
    A state of the jump process: the prey as an integer count.
    """

    t: float
    n: int
    y: float

    def __post_init__(self):
        if self.n < 0 or self.y < 0:
            raise ValidationError(f'Counts and concentrations must be nonnegative, received {self}.')

    @classmethod
    def from_state(cls, s: State, omega: float) -> 'JumpState':
        return cls(s.t, int(round(s.x * omega)), s.y)

    def to_state(self, omega: float) -> State:
        return State(self.t, self.n / omega, self.y)


def expected_events(params: ModelParams, init: State, horizon: float) -> float:
    """
    A first order estimate of the number of events a run needs: the initial rate times the horizon.
    """
    return total_event_rate(params, init) * horizon


def step_jump(params: ModelParams, s: JumpState, rng: RngStream) -> JumpState:
    """
    Draws the next event of the process.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    s: JumpState
      The current state, with at least one prey.
    rng: RngStream
      Supplies the waiting time and the event kind.

    Returns
    -------
    The state right after the event.
    """
    if s.n < 1:
        raise ContractError('step_jump needs at least one prey; absorbed states only decay.')
    if total_event_rate(params, s.to_state(params.omega)) <= 0:
        raise DegenerateRateError(f'No prey event can happen at {s}.')
    u_time = 1.0 - rng.uniform()
    u_kind = rng.uniform()
    n, y, t, _ = kernels.jump_event(params.kernel_theta(), s.n, s.y, s.t, u_time, u_kind)
    return JumpState(float(t), int(n), float(y))


def event_budget() -> int:
    return int(getattr(context.get_settings(), 'jump_event_budget', 10 ** 9))


def _capacity(t0: float, horizon: float, sample_stride: float) -> int:
    return int(max(horizon - t0, 0.0) / sample_stride) + 3


def advance_jump(params: ModelParams, n: int, y: float, t: float, horizon: float, builder: TrajectoryBuilder,
                 rng: RngStream, budget: int, max_count: int = 0) -> tuple:
    """
    Runs the compiled event loop from (t, n, y) and hands its samples to builder.

    Parameters
    ----------
    max_count: int
      Stop as soon as the count exceeds this, 0 for never.

    Returns
    -------
    A tuple (n, y, t, status, events, captures), status being one of the kernels run codes.
    """
    capacity = _capacity(t, horizon, builder.sample_stride)
    ts, xs, ys, n, y, t, next_sample, status, events, captures = kernels.jump_run(
        params.kernel_theta(), n, y, t, horizon, builder.sample_stride, builder.next_sample, max_count, budget,
        rng.generator, capacity)
    builder.extend(ts, xs, ys, next_sample)
    if status == kernels.BUDGET:
        raise BudgetExceededError(f'The jump process used its budget of {budget} events before t = {horizon}; '
                                  'use the diffusion integrator for this population scale.')
    return int(n), float(y), float(t), int(status), int(events), int(captures)


def finish(params: ModelParams, builder: TrajectoryBuilder, status: int, x: float, y: float, t: float,
           grid_dt: float | None = None) -> Trajectory:
    """
    Maps a kernel status onto the final state and termination of a run.
    """
    if status == kernels.NOT_FINITE:
        raise NumericError(f'The state stopped being finite at t = {t}.')
    if status == kernels.PREY_ABSORBED:
        builder.diagnostics['absorption_time'] = t
        builder.diagnostics['absorption_y'] = y
        final, termination = builder.decay_tail(params, t, y, grid_dt)
        return builder.build(final, termination)
    final = State(t, max(x, 0.0), max(y, 0.0))
    termination = Termination.RAN_TO_HORIZON
    if status == kernels.PREDATOR_EXTINCT:
        termination = Termination.PREDATOR_EXTINCT
        builder.diagnostics['extinction_time'] = t
    return builder.build(final, termination)


def simulate_jump(params: ModelParams, init: State, horizon: float, sample_stride: float, rng: RngStream,
                  budget: int | None = None) -> Trajectory:
    """
    Simulates the jump process from init until horizon or extinction.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    init: State
      The start; init.x omega is rounded to the nearest count.
    horizon: float
      The absolute end time.
    sample_stride: float
      The spacing of the recorded samples.
    rng: RngStream
      The random stream of this run.
    budget: int | None
      The maximum number of events, the settings' jump_event_budget when omitted.

    Returns
    -------
    The sampled Trajectory. Once the prey is gone the predator decays in closed form.
    """
    if horizon < init.t or not math.isfinite(horizon):
        raise ValidationError(f'The horizon must be finite and not before the start, received {horizon}.')
    if sample_stride <= 0:
        raise ValidationError(f'sample_stride must be positive, received {sample_stride}.')
    budget = budget or event_budget()
    expected = expected_events(params, init, horizon - init.t)
    if expected > budget:
        raise BudgetExceededError(f'About {expected:.3g} events expected, the budget is {budget}; '
                                  'use the diffusion integrator for this population scale.')
    start = JumpState.from_state(init, params.omega)
    builder = TrajectoryBuilder(init, horizon, sample_stride)
    n, y, t, status, events, captures = advance_jump(params, start.n, start.y, start.t, horizon, builder, rng, budget)
    builder.diagnostics['events'] = events
    builder.diagnostics['captures'] = captures
    return finish(params, builder, status, n / params.omega, y, t)
