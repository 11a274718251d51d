import math
from dataclasses import dataclass

from attofox import kernels
from attofox.exceptions import NumericError, ValidationError
from attofox.jump import RngStream, advance_jump, event_budget, finish
from attofox.model import ModelParams, State
from attofox.trajectory import Trajectory, TrajectoryBuilder

"""
Euler-Maruyama integration of the diffusion approximation, with the absorbing prey barrier at one individual.

One Gaussian variate per step drives both equations: x' = x + drift - sigma_x W, y' = y + drift + sigma_y W.
"""


@dataclass(frozen=True)
class DiffusionConfig(object):
    """
    Integration settings of the diffusion approximation.

    Parameters
    ----------
    dt: float
      The fixed time step.
    hybrid_threshold: float | None
      The prey count at or below which the exact jump process takes over, None to disable.
    noiseless: bool
      Forces both noise amplitudes to zero; the barrier is kept.
    """

    dt: float = 1e-4
    hybrid_threshold: float | None = None
    noiseless: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f'dt must be positive and finite, received {self.dt}.')
        if self.hybrid_threshold is not None and self.hybrid_threshold < 1:
            raise ValidationError(f'hybrid_threshold must be at least 1, received {self.hybrid_threshold}.')

    @property
    def noise_scale(self) -> float:
        return 0.0 if self.noiseless else 1.0


def advance_diffusion(params: ModelParams, dt: float, s: State, w: float, noise_scale: float = 1.0) -> State:
    """
    One step of the scheme from an explicit standard normal variate w.

    A prey at or below 1 / omega is absorbed: x becomes 0 and y decays without noise.
    """
    x, y, _ = kernels.diffusion_increment(params.kernel_theta(), s.x, s.y, s.t, dt, noise_scale, w)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NumericError(f'The diffusion step from {s} is not finite.')
    return State(s.t + dt, max(x, 0.0), max(y, 0.0))


def step_diffusion(params: ModelParams, cfg: DiffusionConfig, s: State, rng: RngStream) -> State:
    """
    One step of the scheme; no variate is drawn once the prey is absorbed.
    """
    w = 0.0
    if s.x > 1 / params.omega:
        w = rng.normal()
    return advance_diffusion(params, cfg.dt, s, w, cfg.noise_scale)


def _validate_run(init: State, horizon: float, sample_stride: float) -> None:
    if horizon < init.t or not math.isfinite(horizon):
        raise ValidationError(f'The horizon must be finite and not before the start, received {horizon}.')
    if sample_stride <= 0:
        raise ValidationError(f'sample_stride must be positive, received {sample_stride}.')


def _integrate(params: ModelParams, cfg: DiffusionConfig, init: State, horizon: float, sample_stride: float,
               rng: RngStream, threshold: float | None) -> Trajectory:
    _validate_run(init, horizon, sample_stride)
    theta = params.kernel_theta()
    omega = params.omega
    builder = TrajectoryBuilder(init, horizon, sample_stride)
    budget = event_budget() if threshold else 0
    x, y, t = init.x, init.y, init.t
    clamps = 0
    switches = 0
    events = 0
    grid_dt = cfg.dt
    while True:
        if threshold and round(x * omega) >= 1 and x * omega <= threshold:
            switches += 1
            n, y, t, status, segment_events, _ = advance_jump(params, int(round(x * omega)), y, t, horizon, builder,
                                                              rng, budget, max_count=int(2 * threshold))
            x = n / omega
            events += segment_events
            grid_dt = None
        else:
            capacity = int(max(horizon - t, 0.0) / sample_stride) + 3
            ts, xs, ys, x, y, t, next_sample, status, segment_clamps = kernels.diffusion_run(
                theta, x, y, t, horizon, cfg.dt, sample_stride, builder.next_sample, threshold or 0.0,
                cfg.noise_scale, rng.generator, capacity)
            builder.extend(ts, xs, ys, next_sample)
            clamps += int(segment_clamps)
            grid_dt = cfg.dt
        if status != kernels.SWITCH:
            break
    builder.diagnostics['clamp_count'] = clamps
    if threshold:
        builder.diagnostics['switches'] = switches
        builder.diagnostics['events'] = events
    return finish(params, builder, int(status), float(x), float(y), float(t), grid_dt)


def simulate_diffusion(params: ModelParams, cfg: DiffusionConfig, init: State, horizon: float, sample_stride: float,
                       rng: RngStream) -> Trajectory:
    """
    Integrates the diffusion approximation from init.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    cfg: DiffusionConfig
      The step size and noise switch; hybrid_threshold is ignored here.
    init: State
      The start.
    horizon: float
      The absolute end time.
    sample_stride: float
      The spacing of the recorded samples.
    rng: RngStream
      The random stream of this run.

    Returns
    -------
    The sampled Trajectory. The run stops at the first step ending with y <= 1 / omega; a run whose prey
    was absorbed is finished with the exact predator decay, snapped to the dt grid.
    """
    return _integrate(params, cfg, init, horizon, sample_stride, rng, None)


def simulate_hybrid(params: ModelParams, cfg: DiffusionConfig, init: State, horizon: float, sample_stride: float,
                    rng: RngStream) -> Trajectory:
    """
    Integrates the diffusion approximation, handing over to the jump process while the prey is scarce.

    The jump process takes over at omega x <= hybrid_threshold and gives back once the count exceeds twice
    the threshold. Without a threshold this is simulate_diffusion.
    """
    return _integrate(params, cfg, init, horizon, sample_stride, rng, cfg.hybrid_threshold)
