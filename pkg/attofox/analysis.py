import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.spatial import cKDTree

from attofox import kernels
from attofox.context import context
from attofox.diffusion import DiffusionConfig, simulate_diffusion, simulate_hybrid
from attofox.exceptions import BracketError, NoCycleError, NoMinimumError, NumericError, ValidationError
from attofox.jump import RngStream, simulate_jump
from attofox.model import (ConstantMortality, ModelParams, State, equilibrium, functional_response, mortality_at,
                           noise_amplitudes)
from attofox.ode import PreyMinimum, first_prey_minimum, simulate_ode

"""
Quantities built on top of the integrators: extinction ensembles, limit cycles, the safety trajectory,
the width of the funnel between them, the canard value of m and the jump against diffusion comparison.
"""

# The ensemble start used throughout.
STANDARD_INIT = State(0.0, 2.0, 0.5)
# Start of the jump and diffusion comparison.
COMPARISON_INIT = State(0.0, 0.2, 0.6)
# Prey threshold, in individuals, that defines the safety trajectory.
SAFETY_INDIVIDUALS = 1e3
# Far enough right to stand for a start at infinity.
FAR_X = 2.0

TABLE1_OMEGAS = (1e5, 1e6, 2e6, 4e6, 6e6, 8e6, 9e6, 1e7, 1.1e7, 1.2e7, 1.3e7, 1.4e7, 1.5e7, 1.6e7, 1.7e7, 1.8e7,
                 1.9e7, 2e7)
TABLE2_OMEGAS = (1e9, 1e8, 1e7, 1e6)
SEASONAL_OMEGAS = (1e12, 1e9, 1e8, 1e7)

COMPARISON_COLUMNS = ['omega', 'checkpoint', 'variable', 'mean_jump', 'std_jump', 'mean_diffusion',
                      'std_diffusion', 'z']


@dataclass
class ExtinctionStats(object):
    """
    Summary of an extinction ensemble; mean_T and std_T are over the extinct runs only, None without any.
    """

    omega: float
    n_runs: int
    n_extinct: int
    mean_T: float | None
    std_T: float | None
    horizon: float = 1000.0

    @property
    def p_ext(self) -> float:
        return self.n_extinct / self.n_runs

    def to_record(self) -> dict:
        return {'omega': self.omega, 'n_runs': self.n_runs, 'n_extinct': self.n_extinct, 'p_ext': self.p_ext,
                'mean_T': self.mean_T, 'std_T': self.std_T}


@dataclass
class Cycle(object):
    """
    One period of a limit cycle of the deterministic scheme, starting on the section x = x*.
    """

    x: np.ndarray
    y: np.ndarray
    period: float
    min_x: float
    classification: str

    @property
    def is_large(self) -> bool:
        return self.classification == 'large'


@dataclass
class FunnelReport(object):
    """
    The safety trajectory, the width of the funnel it leaves around the limit cycle and the local noise.
    """

    omega: float
    alpha: float
    y0_star: float
    rho: float
    sigma_x_local: float
    sigma_y_local: float
    cycle_point: tuple = ()
    safety_point: tuple = ()

    def to_record(self) -> dict:
        return {'omega': self.omega, 'alpha': self.alpha, 'y0_star': self.y0_star, 'rho': self.rho,
                'sigma_x': self.sigma_x_local, 'sigma_y': self.sigma_y_local}


@dataclass
class CanardResult(object):
    """
    The bisected canard value of m and every classification made on the way.
    """

    m_star: float
    bracket: tuple
    history: list = field(default_factory=list)


def _workers(workers: int | None) -> int:
    if workers is not None:
        return workers
    return int(getattr(context.get_settings(), 'workers', 1))


def _extinction_time(params: ModelParams, cfg: DiffusionConfig, init: State, horizon: float, master_seed: int,
                     index: int, integrator: str) -> float | None:
    rng = RngStream(master_seed).spawn(index)
    simulate = simulate_hybrid if integrator == 'hybrid' else simulate_diffusion
    trajectory = simulate(params, cfg, init, horizon, max(horizon - init.t, cfg.dt), rng)
    return trajectory.extinction_time


def ensemble_extinction(params: ModelParams, n_runs: int, horizon: float = 1000.0, master_seed: int = 0,
                        init: State = STANDARD_INIT, cfg: DiffusionConfig | None = None,
                        integrator: str = 'diffusion', workers: int | None = None) -> ExtinctionStats:
    """
    Runs independent simulations and summarises the time the predator falls to one individual.

    Parameters
    ----------
    params: ModelParams
      The model constants, omega included.
    n_runs: int
      The ensemble size.
    horizon: float
      Runs still alive at the horizon count as persistent.
    master_seed: int
      Run i uses RngStream(master_seed).spawn(i), whatever worker it lands on.
    init: State
      The common start.
    cfg: DiffusionConfig | None
      The integration settings, defaults when omitted.
    integrator: str
      diffusion or hybrid.
    workers: int | None
      The joblib worker count, the settings' workers when omitted.

    Returns
    -------
    The ExtinctionStats of the ensemble; the standard deviation uses n - 1.
    """
    if n_runs < 1:
        raise ValidationError(f'An ensemble needs at least one run, received {n_runs}.')
    if integrator not in ('diffusion', 'hybrid'):
        raise ValidationError(f'Extinction ensembles run the diffusion or hybrid integrator, not {integrator}.')
    cfg = cfg or DiffusionConfig()
    if integrator == 'hybrid' and cfg.hybrid_threshold is None:
        cfg = DiffusionConfig(cfg.dt, 1e3, cfg.noiseless)
    times = Parallel(n_jobs=_workers(workers))(
        delayed(_extinction_time)(params, cfg, init, horizon, master_seed, index, integrator)
        for index in range(n_runs))
    extinct = np.array([time for time in times if time is not None and time <= horizon], dtype=float)
    mean_T = float(np.mean(extinct)) if len(extinct) else None
    std_T = None
    if len(extinct) == 1:
        std_T = 0.0
    elif len(extinct) > 1:
        std_T = float(np.std(extinct, ddof=1))
    return ExtinctionStats(params.omega, n_runs, len(extinct), mean_T, std_T, horizon)


def extinction_table(params: ModelParams, omegas: tuple = TABLE1_OMEGAS, n_runs: int = 200, horizon: float = 1000.0,
                     master_seed: int = 0, **kwargs) -> pd.DataFrame:
    """
    One ensemble_extinction row per omega, in the given order.
    """
    if not len(omegas):
        raise ValidationError('The omega list is empty.')
    records = [ensemble_extinction(params.replace(omega=omega), n_runs, horizon, master_seed, **kwargs).to_record()
               for omega in omegas]
    return pd.DataFrame.from_records(records, columns=['omega', 'n_runs', 'n_extinct', 'p_ext', 'mean_T', 'std_T'])


def find_limit_cycle(params: ModelParams, seed_state: State = STANDARD_INIT, settle_time: float = 300.0,
                     tol: float = 1e-8, dt: float = 1e-4, max_returns: int = 200, max_period: float = 200.0,
                     threshold: float | None = None) -> Cycle:
    """
    Finds the attracting periodic orbit of the Euler scheme through returns to the section x = x*.

    Parameters
    ----------
    params: ModelParams
      The model constants, with a constant mortality.
    seed_state: State
      Where the settling run starts.
    settle_time: float
      How long to integrate before looking at the section.
    tol: float
      Consecutive crossing heights closer than this count as converged.
    dt: float
      The Euler step.
    max_returns: int
      How many returns to allow before giving up.
    max_period: float
      The longest a single return may take.
    threshold: float | None
      Cycles with min_x below this are large, the settings' cycle_size_threshold when omitted.

    Returns
    -------
    The Cycle traced over one period.
    """
    point = equilibrium(params)
    if point is None:
        raise NoCycleError('There is no coexistence equilibrium to circle around.')
    if threshold is None:
        threshold = float(getattr(context.get_settings(), 'cycle_size_threshold', 1e-6))
    section = point[0]
    theta = params.kernel_theta()
    x, y = kernels.euler_advance(theta, seed_state.x, seed_state.y, seed_state.t, dt, int(round(settle_time / dt)))
    t = seed_state.t + settle_time
    max_steps = int(round(max_period / dt))
    previous = None
    for _ in range(max_returns):
        x, y, t, y_cross, t_cross, found, _, _ = kernels.euler_to_section(theta, x, y, t, dt, section, max_steps, False)
        if not found:
            raise NoCycleError(f'The trajectory stopped returning to x = {section:.6f}; the equilibrium attracts.')
        if previous is not None and abs(y_cross - previous) < tol:
            break
        previous = y_cross
    else:
        raise NoCycleError(f'Section returns did not settle within {max_returns} periods.')
    _, _, _, _, t_next, found, xs, ys = kernels.euler_to_section(theta, x, y, t, dt, section, max_steps, True)
    if not found:
        raise NoCycleError('The orbit did not close.')
    if xs.max() - xs.min() < 1e-5:
        raise NoCycleError('The orbit has collapsed onto the equilibrium.')
    min_x = float(xs.min())
    classification = 'large' if min_x < threshold else 'small'
    return Cycle(xs, ys, float(t_next - t_cross), min_x, classification)


def classify_cycle(params: ModelParams, **kwargs) -> str:
    return find_limit_cycle(params, **kwargs).classification


def min_prey_of_trajectory(params: ModelParams, init: State, horizon: float = 1000.0, dt: float = 1e-4,
                           method: str = 'dop853') -> PreyMinimum:
    """
    The first local minimum of x from init, followed in log coordinates.

    method is passed to first_prey_minimum: dop853 for the minimum of the system itself, euler for
    the minimum of the curve the Euler scheme draws with step dt.

    Returns
    -------
    A PreyMinimum; min_x is its x and the time its t. below_floor flags minima under the xi floor.
    """
    if init.x <= 0:
        raise ValidationError('The log chart needs a start with x > 0.')
    return first_prey_minimum(params, params.eps * math.log(init.x), init.y, init.t, dt, init.t + horizon,
                              method=method)


def find_safety_trajectory(params: ModelParams, alpha: float, bracket: tuple = (0.5, 1.0), dt: float = 1e-4,
                           rtol: float = 1e-3, width: float = 1e-12) -> float:
    """
    Bisects for the start (2, y0) whose first prey minimum equals alpha.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    alpha: float
      The prey level, below the equilibrium x*.
    bracket: tuple
      (y_lo, y_hi) with a minimum above alpha from y_lo and below alpha from y_hi.
    dt: float
      The Euler step.
    rtol: float
      Accept a start whose minimum is within this relative distance of alpha.
    width: float
      Stop once the bracket is this narrow.

    Returns
    -------
    y0_star.
    """
    point = equilibrium(params)
    if point is None or not 0 < alpha < point[0]:
        raise ValidationError(f'alpha must lie in (0, x*), received {alpha}.')
    lower, upper = bracket

    def minimum(y0):
        return min_prey_of_trajectory(params, State(0.0, FAR_X, y0), dt=dt, method='euler').x

    if not minimum(lower) > alpha > minimum(upper):
        raise BracketError(f'The starts {lower} and {upper} do not straddle a minimum of {alpha}.')
    while upper - lower >= width:
        middle = 0.5 * (lower + upper)
        level = minimum(middle)
        if abs(level - alpha) < rtol * alpha:
            return middle
        if level > alpha:
            lower = middle
        else:
            upper = middle
    return 0.5 * (lower + upper)


def _climbing(params: ModelParams, x: np.ndarray, y: np.ndarray, section: float) -> np.ndarray:
    rising = (functional_response(params, x) - float(mortality_at(params, 0.0))) * y > 0
    return (x >= section) & rising


def _segment_distance(point: np.ndarray, start: np.ndarray, end: np.ndarray) -> tuple:
    direction = end - start
    length = float(direction @ direction)
    fraction = 0.0 if length == 0 else min(max(float((point - start) @ direction) / length, 0.0), 1.0)
    nearest = start + fraction * direction
    return float(np.hypot(*(point - nearest))), nearest


def funnel_width(params: ModelParams, omega: float | None = None, dt: float = 1e-4, bracket: tuple = (0.5, 1.0),
                 cycle: Cycle | None = None) -> FunnelReport:
    """
    The distance between the safety trajectory and the limit cycle on their climbing arcs.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    omega: float | None
      The population scale, params.omega when omitted; alpha is 1000 individuals.
    dt: float
      The Euler step of both curves.
    bracket: tuple
      The start bracket for find_safety_trajectory.
    cycle: Cycle | None
      A limit cycle already found for these constants.

    Returns
    -------
    A FunnelReport, the noise amplitudes taken at the closest cycle point.
    """
    if omega is not None:
        params = params.replace(omega=omega)
    alpha = SAFETY_INDIVIDUALS / params.omega
    y0_star = find_safety_trajectory(params, alpha, bracket, dt)
    start = State(0.0, FAR_X, y0_star)
    minimum = min_prey_of_trajectory(params, start, dt=dt, method='euler')
    safety = simulate_ode(params, start, minimum.t, dt, dt)
    cycle = cycle or find_limit_cycle(params, dt=dt)
    section = equilibrium(params)[0]
    safety_keep = _climbing(params, safety.x, safety.y, section)
    cycle_keep = np.flatnonzero(_climbing(params, cycle.x, cycle.y, section))
    if not safety_keep.any() or not len(cycle_keep):
        raise NumericError('The safety trajectory or the cycle has no climbing arc right of x*.')
    safety_points = np.column_stack((safety.x[safety_keep], safety.y[safety_keep]))
    cycle_points = np.column_stack((cycle.x, cycle.y))
    distances, neighbours = cKDTree(cycle_points[cycle_keep]).query(safety_points)
    best = int(np.argmin(distances))
    rho = float(distances[best])
    closest = safety_points[best]
    index = int(cycle_keep[neighbours[best]])
    nearest = cycle_points[index]
    for other in (index - 1, index + 1):
        if other in cycle_keep:
            distance, candidate = _segment_distance(closest, cycle_points[index], cycle_points[other])
            if distance < rho:
                rho, nearest = distance, candidate
    if not rho > 0:
        raise NumericError('The safety trajectory touches the limit cycle.')
    sigma_x, sigma_y = noise_amplitudes(params, State(0.0, float(nearest[0]), float(nearest[1])), 1e-4)
    return FunnelReport(params.omega, alpha, y0_star, rho, sigma_x, sigma_y, tuple(map(float, nearest)),
                        tuple(map(float, closest)))


def funnel_table(params: ModelParams, omegas: tuple = TABLE2_OMEGAS, dt: float = 1e-4) -> pd.DataFrame:
    """
    One funnel_width row per omega; an omega whose alpha is out of range gets an error status instead.
    """
    if not len(omegas):
        raise ValidationError('The omega list is empty.')
    cycle = find_limit_cycle(params, dt=dt)
    records = []
    for omega in omegas:
        try:
            record = funnel_width(params, omega, dt, cycle=cycle).to_record()
            record['status'] = 'ok'
        except ValidationError as e:
            record = {'omega': omega, 'alpha': SAFETY_INDIVIDUALS / omega, 'status': f'error: {e}'}
        records.append(record)
    columns = ['omega', 'alpha', 'y0_star', 'rho', 'sigma_x', 'sigma_y', 'status']
    return pd.DataFrame.from_records(records, columns=columns)


def find_canard_m(params: ModelParams, bracket: tuple = (0.6644, 0.6645), width: float = 1e-9,
                  dt: float = 1e-4, threshold: float | None = None) -> CanardResult:
    """
    Bisects m between a large and a small limit cycle.

    Cycles just below the explosion dip to about 1e-5, so the two families are split at the settings'
    canard_threshold rather than at cycle_size_threshold.

    Parameters
    ----------
    params: ModelParams
      The model constants; the mortality is replaced by each trial value of m.
    bracket: tuple
      (m_lo, m_hi), a large cycle at one end and a small one at the other.
    width: float
      Stop once the bracket is this narrow.
    dt: float
      The Euler step.
    threshold: float | None
      Cycles with min_x below this are large, the settings' canard_threshold when omitted.

    Returns
    -------
    A CanardResult whose history lists (m, classification, min_x) in evaluation order.
    """
    lower, upper = bracket
    if not lower < upper:
        raise ValidationError(f'The bracket must be increasing, received {bracket}.')
    if threshold is None:
        threshold = float(getattr(context.get_settings(), 'canard_threshold', 1e-3))
    history = []

    def classify(m):
        cycle = find_limit_cycle(params.replace(mortality=ConstantMortality(m)), dt=dt, threshold=threshold)
        history.append({'m': m, 'classification': cycle.classification, 'min_x': cycle.min_x})
        return cycle.classification

    lower_class = classify(lower)
    if classify(upper) == lower_class:
        raise BracketError(f'Both ends of {bracket} give a {lower_class} cycle.')
    while upper - lower > width:
        middle = 0.5 * (lower + upper)
        if classify(middle) == lower_class:
            lower = middle
        else:
            upper = middle
    return CanardResult(0.5 * (lower + upper), (lower, upper), history)


def _checkpoint_states(trajectory, checkpoints: tuple) -> np.ndarray:
    return np.array([[trajectory.state_at(c).x, trajectory.state_at(c).y] for c in checkpoints])


def _jump_checkpoints(params, init, horizon, stride, checkpoints, master_seed, index) -> np.ndarray:
    trajectory = simulate_jump(params, init, horizon, stride, RngStream(master_seed).spawn(index))
    return _checkpoint_states(trajectory, checkpoints)


def _diffusion_checkpoints(params, cfg, init, horizon, stride, checkpoints, master_seed, index) -> np.ndarray:
    trajectory = simulate_diffusion(params, cfg, init, horizon, stride, RngStream(master_seed).spawn(index))
    return _checkpoint_states(trajectory, checkpoints)


def compare_processes(params_list: list, n_runs: int, init: State = COMPARISON_INIT, horizon: float = 20.0,
                      checkpoints: tuple = (1.0, 5.0, 10.0), master_seed: int = 0,
                      cfg: DiffusionConfig | None = None, workers: int | None = None) -> pd.DataFrame:
    """
    Checkpoint means and spreads of the jump process against the diffusion approximation.

    Parameters
    ----------
    params_list: list
      One ModelParams per population scale.
    n_runs: int
      Runs of each process per scale.
    init: State
      The common start.
    horizon: float
      The end of every run.
    checkpoints: tuple
      Times at which both processes are compared.
    master_seed: int
      Jump run i uses spawn(i), diffusion run i uses spawn(n_runs + i).
    cfg: DiffusionConfig | None
      The diffusion settings.
    workers: int | None
      The joblib worker count.

    Returns
    -------
    A DataFrame with one row per omega, checkpoint and variable; z is the difference of the means over
    its combined standard error.
    """
    if n_runs == 0:
        return pd.DataFrame(columns=COMPARISON_COLUMNS)
    if n_runs < 0:
        raise ValidationError(f'n_runs must be nonnegative, received {n_runs}.')
    cfg = cfg or DiffusionConfig()
    stride = 0.01
    pool = Parallel(n_jobs=_workers(workers))
    records = []
    for params in params_list:
        jump = np.array(pool(delayed(_jump_checkpoints)(params, init, horizon, stride, checkpoints, master_seed, i)
                             for i in range(n_runs)))
        diffusion = np.array(pool(
            delayed(_diffusion_checkpoints)(params, cfg, init, horizon, stride, checkpoints, master_seed, n_runs + i)
            for i in range(n_runs)))
        ddof = 1 if n_runs > 1 else 0
        for c, checkpoint in enumerate(checkpoints):
            for v, variable in enumerate(('x', 'y')):
                mean_jump, mean_diffusion = jump[:, c, v].mean(), diffusion[:, c, v].mean()
                std_jump, std_diffusion = jump[:, c, v].std(ddof=ddof), diffusion[:, c, v].std(ddof=ddof)
                error = math.sqrt((std_jump ** 2 + std_diffusion ** 2) / n_runs)
                z = (mean_jump - mean_diffusion) / error if error > 0 else math.nan
                records.append({'omega': params.omega, 'checkpoint': checkpoint, 'variable': variable,
                                'mean_jump': mean_jump, 'std_jump': std_jump, 'mean_diffusion': mean_diffusion,
                                'std_diffusion': std_diffusion, 'z': z})
    return pd.DataFrame.from_records(records, columns=COMPARISON_COLUMNS)


def phase_portrait(params: ModelParams, y_values: tuple | None = None, horizon: float = 50.0, dt: float = 1e-4,
                   sample_stride: float = 0.01) -> tuple:
    """
    The fan of deterministic trajectories from (2, y0), each with its first prey minimum.

    Parameters
    ----------
    y_values: tuple | None
      The starting heights, 0.5 +- k 0.05 for k = 0..9 when omitted.

    Returns
    -------
    A tuple of a long DataFrame (label, y0, t, x, y, xi) and a list of minimum records.
    """
    if y_values is None:
        y_values = sorted({round(0.5 + sign * k * 0.05, 10) for k in range(10) for sign in (-1, 1)})
    frames = []
    minima = []
    for label, y0 in enumerate(y_values):
        start = State(0.0, FAR_X, y0)
        frame = simulate_ode(params, start, horizon, dt, sample_stride).to_frame(params.eps)
        frame.insert(0, 'y0', y0)
        frame.insert(0, 'label', label)
        frames.append(frame)
        record = {'label': label, 'y0': y0, 'min_x': None, 't_min': None, 'below_floor': False,
                  'below_1e-6': None, 'below_1e-9': None}
        try:
            minimum = min_prey_of_trajectory(params, start, horizon, dt)
            record.update({'min_x': minimum.x, 't_min': minimum.t, 'below_floor': minimum.below_floor,
                           'below_1e-6': minimum.x < 1e-6, 'below_1e-9': minimum.x < 1e-9})
        except NoMinimumError:
            pass
        minima.append(record)
    return pd.concat(frames, ignore_index=True), minima


def seasonal_comparison(params: ModelParams, omegas: tuple = SEASONAL_OMEGAS, horizon: float = 300.0,
                        master_seed: int = 0, cfg: DiffusionConfig | None = None, init: State = STANDARD_INIT,
                        sample_stride: float = 0.01) -> tuple:
    """
    Deterministic and diffusion runs under the same mortality schedule, one diffusion run per omega.

    Returns
    -------
    A tuple of a long DataFrame (omega, process, t, x, y) and one summary record per omega with the sup
    norm gap between the two runs over their common samples.
    """
    cfg = cfg or DiffusionConfig()
    deterministic = simulate_ode(params, init, horizon, cfg.dt, sample_stride)
    frames = []
    summaries = []
    for index, omega in enumerate(omegas):
        scaled = params.replace(omega=omega)
        noisy = simulate_diffusion(scaled, cfg, init, horizon, sample_stride, RngStream(master_seed).spawn(index))
        common = min(len(noisy), len(deterministic))
        gap = float(max(np.max(np.abs(noisy.x[:common] - deterministic.x[:common])),
                        np.max(np.abs(noisy.y[:common] - deterministic.y[:common]))))
        for process, trajectory in (('ode', deterministic), ('diffusion', noisy)):
            frames.append(pd.DataFrame({'omega': omega, 'process': process, 't': trajectory.t, 'x': trajectory.x,
                                        'y': trajectory.y}))
        summaries.append({'omega': omega, 'termination': noisy.termination.value,
                          'extinction_time': noisy.extinction_time, 'sup_gap': gap})
    return pd.concat(frames, ignore_index=True), summaries
