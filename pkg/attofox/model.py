import dataclasses
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from attofox.exceptions import ContractError, DegenerateRateError, ValidationError

"""
Model constants and the pure scalar functions shared by every integrator.

Prey x and predator y are concentrations; omega individuals make one unit of prey.
"""

# Keys accepted by parameter files, in the order they are written.
PARAMETER_KEYS = ('r', 'K', 'a', 'eps', 'omega', 'm', 'm_a0', 'm_b0', 'm_rate')
COSINE_KEYS = ('m_a0', 'm_b0', 'm_rate')


@dataclass(frozen=True)
class ConstantMortality(object):
    """
    A predator mortality that does not change with time.
    """

    m: float = 0.6645

    def __post_init__(self):
        if not 0 < self.m < 1:
            raise ValidationError(f'Constant mortality must satisfy 0 < m < 1, received {self.m}.')

    def rate_at(self, t):
        return np.zeros_like(np.asarray(t, dtype=float)) + self.m

    def integral(self, t0: float, t1: float) -> float:
        return self.m * (t1 - t0)

    def kernel_coefficients(self) -> tuple:
        return self.m, 0.0, 0.0

    def to_mapping(self) -> dict:
        return {'m': self.m}


@dataclass(frozen=True)
class CosineMortality(object):
    """
    A seasonally forced mortality m(t) = a0 + b0 cos(rate t).
    """

    a0: float
    b0: float
    rate: float

    def __post_init__(self):
        if self.a0 - abs(self.b0) <= 0:
            raise ValidationError(f'Mortality must stay positive, a0 - |b0| = {self.a0 - abs(self.b0)}.')
        if self.rate < 0:
            raise ValidationError(f'The forcing rate must be nonnegative, received {self.rate}.')

    @classmethod
    def seasonal(cls, base: float, depth: float, rate: float) -> 'CosineMortality':
        """
        Builds m(t) = base - depth (1 - cos(rate t)).

        Parameters
        ----------
        base: float
          The mortality at t = 0.
        depth: float
          Half of the peak to trough swing.
        rate: float
          The angular frequency of the forcing.

        Returns
        -------
        The equivalent schedule in a0 + b0 cos(rate t) form.
        """
        return cls(a0=base - depth, b0=depth, rate=rate)

    def rate_at(self, t):
        return self.a0 + self.b0 * np.cos(self.rate * np.asarray(t, dtype=float))

    def integral(self, t0: float, t1: float) -> float:
        if self.rate == 0:
            return (self.a0 + self.b0) * (t1 - t0)
        swing = math.sin(self.rate * t1) - math.sin(self.rate * t0)
        return self.a0 * (t1 - t0) + self.b0 / self.rate * swing

    def kernel_coefficients(self) -> tuple:
        return self.a0, self.b0, self.rate

    def to_mapping(self) -> dict:
        return {'m_a0': self.a0, 'm_b0': self.b0, 'm_rate': self.rate}


MortalitySchedule = ConstantMortality | CosineMortality


@dataclass(frozen=True)
class ModelParams(object):
    """
    All constants of the prey-predator model.

    Defaults reproduce f(x) = x (2 - x) / 2, mu(x) = x / (0.4 + x), eps = 0.02 and m = 0.6645.
    """

    r: float = 0.5
    K: float = 2.0
    a: float = 0.4
    eps: float = 0.02
    mortality: MortalitySchedule = field(default_factory=ConstantMortality)
    omega: float = 1e6

    def __post_init__(self):
        for name in ('r', 'K', 'a', 'eps', 'omega'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f'Parameter {name} must be finite, received {value}.')
        if self.r <= 0 or self.K <= 0 or self.a <= 0:
            raise ValidationError(f'r, K and a must be positive, received {self.r}, {self.K}, {self.a}.')
        if not 0 < self.eps <= 1:
            raise ValidationError(f'eps must satisfy 0 < eps <= 1, received {self.eps}.')
        if self.omega < 1:
            raise ValidationError(f'omega must be at least 1, received {self.omega}.')
        if not isinstance(self.mortality, (ConstantMortality, CosineMortality)):
            raise ValidationError(f'Unknown mortality schedule {self.mortality!r}.')

    def replace(self, **changes) -> 'ModelParams':
        return dataclasses.replace(self, **changes)

    @property
    def constant_m(self) -> float:
        """
        The mortality for operations that only make sense with a constant schedule.
        """
        if not isinstance(self.mortality, ConstantMortality):
            raise ContractError('This operation needs a constant mortality schedule.')
        return self.mortality.m

    def kernel_theta(self) -> np.ndarray:
        """
        Packs the constants in the layout the compiled kernels expect.

        Returns
        -------
        A float64 array (r, K, a, eps, m_a0, m_b0, m_rate, omega).
        """
        a0, b0, rate = self.mortality.kernel_coefficients()
        return np.array([self.r, self.K, self.a, self.eps, a0, b0, rate, self.omega], dtype=np.float64)

    def to_mapping(self) -> dict:
        return {'r': self.r, 'K': self.K, 'a': self.a, 'eps': self.eps, 'omega': self.omega,
                **self.mortality.to_mapping()}


@dataclass(frozen=True)
class State(object):
    """
    A point (t, x, y) of a trajectory.
    """

    t: float
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f'State must be finite, received {self}.')
        if self.x < 0 or self.y < 0:
            raise ValidationError(f'Concentrations must be nonnegative, received {self}.')


def prey_growth(params: ModelParams, x):
    """
    The logistic prey growth f(x) = r x (K - x), negative above the carrying capacity.
    """
    return params.r * x * (params.K - x)


def functional_response(params: ModelParams, x):
    """
    The Holling type II response mu(x) = x / (a + x).
    """
    return x / (params.a + x)


def mortality_at(params: ModelParams, t):
    return params.mortality.rate_at(t)


def _fluxes(params: ModelParams, s: State) -> tuple:
    # The birth channel is clamped at zero so probabilities stay in [0, 1] above K.
    births = max(prey_growth(params, s.x), 0.0)
    captures = functional_response(params, s.x) * s.y
    return births, captures


def total_event_rate(params: ModelParams, s: State) -> float:
    """
    The parameter of the exponential waiting time between two prey events.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    s: State
      The current state.

    Returns
    -------
    lambda = (omega / eps) (f(x) + mu(x) y) in events per time unit.
    """
    births, captures = _fluxes(params, s)
    return params.omega / params.eps * (births + captures)


def birth_probability(params: ModelParams, s: State) -> float:
    """
    The probability that the next prey event is a birth rather than a capture.

    Raises
    ------
    DegenerateRateError
      When no event can happen at all.
    """
    births, captures = _fluxes(params, s)
    if births + captures <= 0:
        raise DegenerateRateError(f'No prey event can happen at {s}.')
    return births / (births + captures)


def noise_amplitudes(params: ModelParams, s: State, dt: float) -> tuple:
    """
    The standard deviations of the Gaussian increments of the diffusion approximation over dt.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    s: State
      The current state.
    dt: float
      The time step.

    Returns
    -------
    A tuple (sigma_x, sigma_y). Their ratio is always 2 / eps.
    """
    if dt <= 0:
        raise ValidationError(f'dt must be positive, received {dt}.')
    births, captures = _fluxes(params, s)
    if births + captures <= 0:
        return 0.0, 0.0
    shared = math.sqrt(births * captures / (births + captures))
    sigma_x = math.sqrt(4 * dt / (params.omega * params.eps)) * shared
    sigma_y = math.sqrt(dt * params.eps / params.omega) * shared
    return sigma_x, sigma_y


def prey_nullcline(params: ModelParams, x):
    """
    The nontrivial prey nullcline y = f(x) / mu(x) = r (K - x) (a + x).

    Raises
    ------
    ValidationError
      For x <= 0 where mu vanishes.
    """
    if np.any(np.asarray(x) <= 0):
        raise ValidationError('The prey nullcline is only defined for x > 0.')
    return params.r * (params.K - x) * (params.a + x)


def equilibrium(params: ModelParams) -> tuple | None:
    """
    The coexistence equilibrium, where the predator nullcline mu(x) = m meets the parabola.

    Returns
    -------
    A tuple (x*, y*), or None if the predator nullcline lies beyond the carrying capacity.
    """
    m = params.constant_m
    x_star = params.a * m / (1 - m)
    if x_star >= params.K:
        return None
    y_star = prey_nullcline(params, x_star)
    if y_star <= 0:
        return None
    return x_star, y_star


def jacobian_trace(params: ModelParams) -> float:
    """
    The trace of the vector field's Jacobian at the equilibrium; positive means unstable.
    """
    point = equilibrium(params)
    if point is None:
        raise ContractError('There is no coexistence equilibrium for these parameters.')
    x, y = point
    growth_slope = params.r * (params.K - 2 * x)
    response_slope = params.a / (params.a + x) ** 2
    return (growth_slope - response_slope * y) / params.eps


def decay(params: ModelParams, t0: float, t1: float, y0: float) -> float:
    """
    The predator concentration at t1 when there is no prey left since t0.
    """
    return y0 * math.exp(-params.mortality.integral(t0, t1))


def decay_time(params: ModelParams, t0: float, y0: float, level: float) -> float:
    """
    How long a prey-free predator population needs to decay from y0 down to level.

    Parameters
    ----------
    params: ModelParams
      The model constants.
    t0: float
      The time the decay starts, needed for a seasonal mortality.
    y0: float
      The starting concentration.
    level: float
      The concentration to reach.

    Returns
    -------
    The elapsed time, 0 if y0 is already at or below level.
    """
    if y0 <= level:
        return 0.0
    target = math.log(y0 / level)
    schedule = params.mortality
    if isinstance(schedule, ConstantMortality):
        return target / schedule.m
    slowest = schedule.a0 - abs(schedule.b0)
    fastest = schedule.a0 + abs(schedule.b0)
    return brentq(lambda elapsed: schedule.integral(t0, t0 + elapsed) - target,
                  target / fastest, target / slowest, xtol=1e-14, rtol=1e-14)


def params_from_mapping(values: dict, base: ModelParams | None = None) -> ModelParams:
    """
    Builds parameters from flat keys, starting from base (or the defaults).

    Parameters
    ----------
    values: dict
      Keys out of PARAMETER_KEYS mapped to numbers.
    base: ModelParams | None
      Values for every key not present.

    Returns
    -------
    The resulting parameters.
    """
    base = base or ModelParams()
    unknown = set(values) - set(PARAMETER_KEYS)
    if unknown:
        raise ValidationError(f'Unknown parameter keys: {", ".join(sorted(unknown))}.')
    cosine = [key for key in COSINE_KEYS if key in values]
    if 'm' in values and cosine:
        raise ValidationError('Give either m or the m_a0, m_b0, m_rate schedule, not both.')
    if cosine and len(cosine) != len(COSINE_KEYS):
        raise ValidationError('A cosine mortality needs all of m_a0, m_b0 and m_rate.')
    mortality = base.mortality
    if 'm' in values:
        mortality = ConstantMortality(float(values['m']))
    elif cosine:
        mortality = CosineMortality(float(values['m_a0']), float(values['m_b0']), float(values['m_rate']))
    scalars = {key: float(values[key]) for key in ('r', 'K', 'a', 'eps', 'omega') if key in values}
    return base.replace(mortality=mortality, **scalars)


def _parse_decimal(key: str, raw: str) -> float:
    try:
        value = Decimal(raw)
    except InvalidOperation:
        raise ValidationError(f'Value of {key} is not a number: {raw!r}.')
    if not value.is_finite():
        raise ValidationError(f'Value of {key} must be finite: {raw!r}.')
    return float(value)


def read_params(path: str | Path) -> ModelParams:
    """
    Reads a flat key = value parameter file.

    Parameters
    ----------
    path: str | Path
      The file to read. Blank lines and # comments are ignored.

    Returns
    -------
    The parameters, defaults filling any key the file omits.
    """
    values = {}
    with open(path, 'r') as file:
        for number, line in enumerate(file, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ValidationError(f'{path}:{number}: expected key = value, found {line!r}.')
            key, raw = (part.strip() for part in line.split('=', 1))
            if key not in PARAMETER_KEYS:
                raise ValidationError(f'{path}:{number}: unknown parameter key {key!r}.')
            if key in values:
                raise ValidationError(f'{path}:{number}: duplicate parameter key {key!r}.')
            values[key] = _parse_decimal(key, raw)
    return params_from_mapping(values)


def write_params(params: ModelParams, path: str | Path) -> None:
    """
    Writes parameters in the format read_params understands.
    """
    with open(path, 'w') as file:
        for key, value in params.to_mapping().items():
            file.write(f'{key} = {value!r}\n')
