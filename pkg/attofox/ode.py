import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from attofox import kernels
from attofox.context import context
from attofox.exceptions import NoMinimumError, NumericError, ValidationError
from attofox.model import ModelParams, State, functional_response, mortality_at, prey_growth
from attofox.trajectory import Termination, Trajectory, TrajectoryBuilder

"""
The deterministic slow-fast system, integrated with the same Euler recurrence the noisy integrators use.

Also provides the log chart xi = eps ln(x), which resolves prey levels far below what x itself can show,
and the small-prey reduction whose first minimum has a closed form.
"""


@dataclass(frozen=True)
class LogState(object):
    """
    A point of a trajectory in log chart coordinates, xi = eps ln(x).
    """

    t: float
    xi: float
    y: float


@dataclass
class LogChart(object):
    """
    A trajectory mapped to the log chart; points with x = 0 are dropped and counted.
    """

    t: np.ndarray
    xi: np.ndarray
    y: np.ndarray
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        for t, xi, y in zip(self.t, self.xi, self.y):
            yield LogState(float(t), float(xi), float(y))


@dataclass(frozen=True)
class PreyMinimum(object):
    """
    The first local minimum of the prey along a deterministic trajectory.

    When below_floor is set the search stopped at the xi floor and the true minimum is lower still.
    """

    t: float
    xi: float
    x: float
    y: float
    below_floor: bool = False


def step_euler(params: ModelParams, s: State, dt: float) -> State:
    """
    One step of the Euler scheme x' = x + (dt/eps)(f(x) - mu(x) y), y' = y + dt (mu(x) - m(t)) y.
    """
    if not dt > 0:
        raise ValidationError(f'dt must be positive, received {dt}.')
    dx, dy = kernels.euler_increment(params.kernel_theta(), s.x, s.y, s.t, dt)
    x = s.x + dx
    y = s.y + dy
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NumericError(f'The Euler step from {s} is not finite.')
    if x < 0 or y < 0:
        raise NumericError(f'The Euler step from {s} overshoots zero, dt = {dt} is too large.')
    return State(s.t + dt, x, y)


def simulate_ode(params: ModelParams, init: State, horizon: float, dt: float = 1e-4,
                 sample_stride: float = 0.01) -> Trajectory:
    """
    Integrates the deterministic system with the Euler scheme.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    init: State
      The start; the y axis x = 0 is invariant.
    horizon: float
      The absolute end time.
    dt: float
      The Euler step.
    sample_stride: float
      The spacing of the recorded samples.

    Returns
    -------
    A Trajectory that always runs to the horizon: there is no barrier in the continuous model.
    """
    if horizon < init.t or not math.isfinite(horizon):
        raise ValidationError(f'The horizon must be finite and not before the start, received {horizon}.')
    if not dt > 0 or sample_stride <= 0:
        raise ValidationError(f'dt and sample_stride must be positive, received {dt} and {sample_stride}.')
    builder = TrajectoryBuilder(init, horizon, sample_stride)
    capacity = int((horizon - init.t) / sample_stride) + 3
    ts, xs, ys, x, y, t, next_sample, status = kernels.euler_run(
        params.kernel_theta(), init.x, init.y, init.t, horizon, dt, sample_stride, builder.next_sample, capacity)
    if status == kernels.NOT_FINITE or x < 0 or y < 0:
        raise NumericError(f'The Euler scheme left the positive quadrant before t = {t}, dt = {dt} is too large.')
    builder.extend(ts, xs, ys, next_sample)
    return builder.build(State(float(t), float(x), float(y)), Termination.RAN_TO_HORIZON)


def to_log_chart(params: ModelParams, trajectory: Trajectory) -> LogChart:
    """
    Maps the samples of a trajectory to (t, xi, y); points with x = 0 have no image and are dropped.
    """
    keep = trajectory.x > 0
    return LogChart(trajectory.t[keep], params.eps * np.log(trajectory.x[keep]), trajectory.y[keep],
                    int(np.count_nonzero(~keep)))


def reduced_log_minimum(params: ModelParams, xi0: float, y0: float) -> tuple:
    """
    The first minimum of xi for the small-prey reduction dxi/dt = r K - y / a, dy/dt = -m y.

    Solved in closed form: xi is stationary when y has decayed to a r K.

    Parameters
    ----------
    params: ModelParams
      The model constants, with a constant mortality.
    xi0: float
      The starting log chart abscissa, well below eps.
    y0: float
      The starting predator concentration.

    Returns
    -------
    A tuple (t*, xi*, x*) of the time, the log chart value and the prey concentration at the minimum.
    """
    m = params.constant_m
    if math.exp(xi0 / params.eps) >= params.eps:
        raise ValidationError(f'The reduction needs exp(xi0 / eps) < eps, xi0 = {xi0} is too large.')
    slope = params.r * params.K
    turning = params.a * slope
    if y0 <= turning:
        return 0.0, xi0, math.exp(xi0 / params.eps)
    t_star = math.log(y0 / turning) / m
    xi_star = xi0 + slope * t_star - y0 / (params.a * m) * (1 - math.exp(-m * t_star))
    return t_star, xi_star, math.exp(xi_star / params.eps)


def _log_vector_field(params: ModelParams):
    def vector_field(t, state):
        xi, y = state
        x = math.exp(xi / params.eps)
        return [params.r * (params.K - x) - y / (params.a + x),
                (functional_response(params, x) - float(mortality_at(params, t))) * y]

    return vector_field


def _dop853_first_minimum(params: ModelParams, xi0: float, y0: float, t0: float, horizon: float,
                          xi_floor: float) -> PreyMinimum:
    if xi0 <= xi_floor:
        return PreyMinimum(t0, xi0, math.exp(xi0 / params.eps), y0, True)
    vector_field = _log_vector_field(params)

    def turning(t, state):
        return vector_field(t, state)[0]

    def floor(t, state):
        return state[0] - xi_floor

    turning.terminal, turning.direction = True, 1
    floor.terminal, floor.direction = True, -1
    solution = solve_ivp(vector_field, (t0, horizon), [xi0, y0], method='DOP853', events=(turning, floor),
                         rtol=1e-10, atol=1e-12)
    if solution.status == -1:
        raise NumericError(f'The log chart solver failed: {solution.message}')
    for index, below_floor in ((1, True), (0, False)):
        if len(solution.t_events[index]):
            t = float(solution.t_events[index][0])
            xi, y = (float(value) for value in solution.y_events[index][0])
            return PreyMinimum(t, xi, math.exp(xi / params.eps), y, below_floor)
    raise NoMinimumError(f'No local prey minimum before t = {horizon} from xi = {xi0}, y = {y0}.')


def first_prey_minimum(params: ModelParams, xi0: float, y0: float, t0: float = 0.0, dt: float = 1e-4,
                       horizon: float = 1000.0, xi_floor: float | None = None,
                       method: str = 'dop853') -> PreyMinimum:
    """
    Follows the system in log coordinates (xi, y) up to the first local minimum of the prey.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    xi0: float
      The starting eps ln(x).
    y0: float
      The starting predator concentration.
    t0: float
      The starting time.
    dt: float
      The Euler step, used by the euler method only.
    horizon: float
      How long to search.
    xi_floor: float | None
      Stop as soon as xi falls to this level, the settings' xi_floor when omitted.
    method: str
      dop853 solves dxi/dt = r (K - x) - y / (a + x) adaptively and stops on dxi/dt = 0;
      euler follows the Euler recurrence of the other integrators, exact for curves drawn with that scheme.

    Returns
    -------
    The PreyMinimum reached. A start on the equilibrium is its own minimum.
    """
    if method not in ('dop853', 'euler'):
        raise ValidationError(f'Unknown minimum search method {method}.')
    if xi_floor is None:
        xi_floor = float(getattr(context.get_settings(), 'xi_floor', -3.0))
    x0 = math.exp(xi0 / params.eps)
    per_capita = params.r * (params.K - x0) - y0 / (params.a + x0)
    drift_y = (functional_response(params, x0) - float(mortality_at(params, t0))) * y0
    if abs(per_capita) <= 1e-12 and abs(drift_y) <= 1e-12:
        return PreyMinimum(t0, xi0, x0, y0)
    if method == 'dop853':
        return _dop853_first_minimum(params, xi0, y0, t0, horizon, xi_floor)
    steps = int(math.ceil((horizon - t0) / dt))
    xi, y, t, status = kernels.log_euler_first_minimum(params.kernel_theta(), xi0, y0, t0, dt, steps, xi_floor)
    if status == kernels.NOT_FINITE:
        raise NumericError(f'The log chart Euler step overshoots at t = {t}, dt = {dt} is too large.')
    if status == kernels.NO_MINIMUM:
        raise NoMinimumError(f'No local prey minimum before t = {horizon} from xi = {xi0}, y = {y0}.')
    return PreyMinimum(float(t), float(xi), math.exp(xi / params.eps), float(y), status == kernels.BELOW_FLOOR)


def solve_reference(params: ModelParams, init: State, horizon: float, sample_stride: float = 0.01,
                    rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """
    A high order adaptive solution of the deterministic system, for cross-checking the Euler scheme.
    """
    def vector_field(t, state):
        x, y = state
        return [(prey_growth(params, x) - functional_response(params, x) * y) / params.eps,
                (functional_response(params, x) - float(mortality_at(params, t))) * y]

    samples = np.arange(init.t, horizon + 0.5 * sample_stride, sample_stride)
    samples = samples[samples <= horizon]
    solution = solve_ivp(vector_field, (init.t, horizon), [init.x, init.y], method='DOP853', t_eval=samples,
                         rtol=rtol, atol=atol)
    if not solution.success:
        raise NumericError(f'The reference solver failed: {solution.message}')
    return Trajectory(solution.t, solution.y[0], solution.y[1], Termination.RAN_TO_HORIZON)
