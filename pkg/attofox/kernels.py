import math

import numba
import numpy as np

"""
Compiled inner loops of the jump, diffusion and Euler integrators.

Everything here works on plain floats and the parameter vector built by ModelParams.kernel_theta.
No fastmath: the deterministic and the noiseless diffusion loops must agree bit for bit.
"""

# Layout of the parameter vector.
R, K, A, EPS, M_A0, M_B0, M_RATE, OMEGA = range(8)

# Run status codes.
HORIZON = 1
PREY_ABSORBED = 2
PREDATOR_EXTINCT = 3
SWITCH = 4
BUDGET = 5
NOT_FINITE = 6

# First minimum search status codes.
MINIMUM_FOUND = 10
BELOW_FLOOR = 11
NO_MINIMUM = 12


@numba.njit(cache=True)
def mortality(theta, t):
    if theta[M_B0] == 0.0:
        return theta[M_A0]
    return theta[M_A0] + theta[M_B0] * math.cos(theta[M_RATE] * t)


@numba.njit(cache=True)
def mortality_integral(theta, t0, t1):
    # Simpson's rule over one waiting time, exact for a constant schedule.
    if theta[M_B0] == 0.0:
        return theta[M_A0] * (t1 - t0)
    middle = 0.5 * (t0 + t1)
    return (t1 - t0) / 6.0 * (mortality(theta, t0) + 4.0 * mortality(theta, middle) + mortality(theta, t1))


@numba.njit(cache=True)
def euler_increment(theta, x, y, t, dt):
    growth = theta[R] * x * (theta[K] - x)
    response = x / (theta[A] + x)
    dx = dt / theta[EPS] * (growth - response * y)
    dy = dt * (response - mortality(theta, t)) * y
    return dx, dy


@numba.njit(cache=True)
def noise_factor(theta, x, y):
    births = theta[R] * x * (theta[K] - x)
    if births < 0.0:
        births = 0.0
    captures = x / (theta[A] + x) * y
    total = births + captures
    if total <= 0.0:
        return 0.0
    return math.sqrt(births * captures / total)


@numba.njit(cache=True)
def diffusion_increment(theta, x, y, t, dt, noise_scale, w):
    """
    One Euler-Maruyama step driven by the single Gaussian variate w.

    Returns the new (x, y) and whether the prey was absorbed at the barrier.
    """
    omega = theta[OMEGA]
    if x <= 1.0 / omega:
        return 0.0, y * math.exp(-mortality_integral(theta, t, t + dt)), True
    dx, dy = euler_increment(theta, x, y, t, dt)
    shared = noise_scale * noise_factor(theta, x, y)
    sigma_x = math.sqrt(4.0 * dt / (omega * theta[EPS])) * shared
    sigma_y = math.sqrt(dt * theta[EPS] / omega) * shared
    return x + dx - sigma_x * w, y + dy + sigma_y * w, False


@numba.njit(cache=True)
def jump_event(theta, n, y, t, u_time, u_kind):
    """
    Advances the birth and death process by one event from two uniforms in (0, 1].

    Returns the new (n, y, t) and whether the event was a capture. When no event can
    happen the time returned is infinite and nothing changes.
    """
    omega = theta[OMEGA]
    x = n / omega
    births = theta[R] * x * (theta[K] - x)
    if births < 0.0:
        births = 0.0
    captures = x / (theta[A] + x) * y
    total = births + captures
    if total <= 0.0:
        return n, y, math.inf, False
    t_next = t - math.log(u_time) / (omega / theta[EPS] * total)
    y_next = y * math.exp(-mortality_integral(theta, t, t_next))
    if u_kind * total < births:
        return n + 1, y_next, t_next, False
    return n - 1, y_next + theta[EPS] / omega, t_next, True


@numba.njit(cache=True)
def euler_run(theta, x0, y0, t0, horizon, dt, stride, next_sample, capacity):
    ts = np.empty(capacity)
    xs = np.empty(capacity)
    ys = np.empty(capacity)
    count = 0
    x = x0
    y = y0
    t = t0
    status = HORIZON
    if next_sample <= t0 + 0.5 * dt and count < capacity:
        ts[count] = t0
        xs[count] = x0
        ys[count] = y0
        count += 1
        while next_sample <= t0 + 0.5 * dt:
            next_sample += stride
    steps = int(math.ceil((horizon - t0) / dt - 1e-9))
    for k in range(1, steps + 1):
        t = t0 + (k - 1) * dt
        dx, dy = euler_increment(theta, x, y, t, dt)
        x = x + dx
        y = y + dy
        t = t0 + k * dt
        if not (math.isfinite(x) and math.isfinite(y)):
            status = NOT_FINITE
            break
        if t >= next_sample - 0.5 * dt and count < capacity:
            ts[count] = t
            xs[count] = x
            ys[count] = y
            count += 1
            while next_sample <= t + 0.5 * dt:
                next_sample += stride
    return ts[:count], xs[:count], ys[:count], x, y, t, next_sample, status


@numba.njit(cache=True)
def diffusion_run(theta, x0, y0, t0, horizon, dt, stride, next_sample, switch_count, noise_scale, generator,
                  capacity):
    ts = np.empty(capacity)
    xs = np.empty(capacity)
    ys = np.empty(capacity)
    count = 0
    inv_omega = 1.0 / theta[OMEGA]
    x = x0
    y = y0
    t = t0
    clamps = 0
    status = HORIZON
    if next_sample <= t0 + 0.5 * dt and count < capacity:
        ts[count] = t0
        xs[count] = x0
        ys[count] = y0
        count += 1
        while next_sample <= t0 + 0.5 * dt:
            next_sample += stride
    if y <= inv_omega:
        return ts[:count], xs[:count], ys[:count], x, y, t, next_sample, PREDATOR_EXTINCT, clamps
    steps = int(math.ceil((horizon - t0) / dt - 1e-9))
    for k in range(1, steps + 1):
        t = t0 + (k - 1) * dt
        if x <= inv_omega:
            x = 0.0
            status = PREY_ABSORBED
            break
        if switch_count > 0.0 and x * theta[OMEGA] <= switch_count:
            status = SWITCH
            break
        w = generator.standard_normal()
        x, y, absorbed = diffusion_increment(theta, x, y, t, dt, noise_scale, w)
        t = t0 + k * dt
        if not (math.isfinite(x) and math.isfinite(y)):
            status = NOT_FINITE
            break
        if x < 0.0:
            x = 0.0
        if y < 0.0:
            y = 0.0
            clamps += 1
        if t >= next_sample - 0.5 * dt and count < capacity:
            ts[count] = t
            xs[count] = x
            ys[count] = y
            count += 1
            while next_sample <= t + 0.5 * dt:
                next_sample += stride
        if y <= inv_omega:
            status = PREDATOR_EXTINCT
            break
    return ts[:count], xs[:count], ys[:count], x, y, t, next_sample, status, clamps


@numba.njit(cache=True)
def jump_run(theta, n0, y0, t0, horizon, stride, next_sample, max_count, budget, generator, capacity):
    ts = np.empty(capacity)
    xs = np.empty(capacity)
    ys = np.empty(capacity)
    count = 0
    omega = theta[OMEGA]
    inv_omega = 1.0 / omega
    n = n0
    y = y0
    t = t0
    events = 0
    captures = 0
    status = HORIZON
    while True:
        if n <= 0:
            status = PREY_ABSORBED
            break
        if y <= inv_omega:
            status = PREDATOR_EXTINCT
            break
        if max_count > 0 and n > max_count:
            status = SWITCH
            break
        if events >= budget:
            status = BUDGET
            break
        u_time = 1.0 - generator.random()
        u_kind = generator.random()
        n_next, y_next, t_next, captured = jump_event(theta, n, y, t, u_time, u_kind)
        decayed = y_next
        if captured:
            decayed = y_next - theta[EPS] / omega
        stop = t_next
        crossed = decayed <= inv_omega
        if crossed and theta[M_B0] == 0.0:
            stop = t + math.log(omega * y) / theta[M_A0]
        reached = False
        if stop >= horizon:
            stop = horizon
            crossed = False
            reached = True
        while next_sample <= stop and count < capacity:
            ts[count] = next_sample
            xs[count] = n / omega
            ys[count] = y * math.exp(-mortality_integral(theta, t, next_sample))
            count += 1
            next_sample += stride
        if reached or crossed:
            y = y * math.exp(-mortality_integral(theta, t, stop))
            t = stop
            if crossed:
                status = PREDATOR_EXTINCT
            break
        n = n_next
        y = y_next
        t = t_next
        events += 1
        if captured:
            captures += 1
    return ts[:count], xs[:count], ys[:count], n, y, t, next_sample, status, events, captures


@numba.njit(cache=True)
def euler_advance(theta, x, y, t0, dt, steps):
    for k in range(1, steps + 1):
        dx, dy = euler_increment(theta, x, y, t0 + (k - 1) * dt, dt)
        x = x + dx
        y = y + dy
    return x, y


@numba.njit(cache=True)
def euler_to_section(theta, x, y, t0, dt, section, max_steps, record):
    """
    Runs the Euler scheme until x crosses the vertical line x = section from the left.

    Returns the state after the crossing step, the interpolated crossing (y, t), whether a
    crossing happened and, when record is set, every visited point from the start on.
    """
    size = 0
    if record:
        size = max_steps + 1
    xs = np.empty(size)
    ys = np.empty(size)
    count = 0
    if record:
        xs[0] = x
        ys[0] = y
        count = 1
    for k in range(1, max_steps + 1):
        t = t0 + (k - 1) * dt
        dx, dy = euler_increment(theta, x, y, t, dt)
        x_next = x + dx
        y_next = y + dy
        if record:
            xs[count] = x_next
            ys[count] = y_next
            count += 1
        if x < section <= x_next:
            fraction = (section - x) / (x_next - x)
            y_cross = y + fraction * (y_next - y)
            t_cross = t + fraction * dt
            return x_next, y_next, t0 + k * dt, y_cross, t_cross, True, xs[:count], ys[:count]
        x = x_next
        y = y_next
    return x, y, t0 + max_steps * dt, np.nan, np.nan, False, xs[:count], ys[:count]


@numba.njit(cache=True)
def log_euler_first_minimum(theta, xi0, y0, t0, dt, max_steps, xi_floor):
    """
    The Euler scheme rewritten for xi = eps ln(x), stopped at the first local minimum of xi.

    x' = x (1 + dt/eps h) with h = r (K - x) - y / (a + x), so xi' = xi + eps ln(1 + dt/eps h):
    the same recurrence as the x-Euler step, without underflow.
    """
    eps = theta[EPS]
    xi = xi0
    y = y0
    descended = False
    for k in range(max_steps):
        t = t0 + k * dt
        x = math.exp(xi / eps)
        per_capita = theta[R] * (theta[K] - x) - y / (theta[A] + x)
        factor = 1.0 + dt / eps * per_capita
        if factor <= 0.0:
            return xi, y, t, NOT_FINITE
        xi_next = xi + eps * math.log(factor)
        y_next = y + dt * (x / (theta[A] + x) - mortality(theta, t)) * y
        if xi_next < xi:
            descended = True
        elif xi_next > xi and descended:
            return xi, y, t, MINIMUM_FOUND
        if xi_next <= xi_floor:
            return xi_next, y_next, t + dt, BELOW_FLOOR
        xi = xi_next
        y = y_next
    return xi, y, t0 + max_steps * dt, NO_MINIMUM
