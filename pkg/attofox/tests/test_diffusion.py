import math

import numpy as np
import pytest

from attofox.context import context
from attofox.diffusion import DiffusionConfig, advance_diffusion, simulate_diffusion, simulate_hybrid, step_diffusion
from attofox.exceptions import ValidationError
from attofox.jump import RngStream
from attofox.model import CosineMortality, ModelParams, State, decay
from attofox.ode import simulate_ode
from attofox.trajectory import Termination

"""
Tests the Euler-Maruyama integrator of the diffusion approximation and its hybrid mode.
"""

context.set_settings_module('attofox.test_settings')


def test_single_step() -> None:
    """
    Tests one step: drift only for w = 0 or at x = K, opposite noise signs otherwise.
    """
    params = ModelParams()
    s = State(0.0, 2.0, 0.5)
    drift = advance_diffusion(params, 1e-4, s, 0.0)
    assert drift.x == pytest.approx(1.9979167, abs=1e-7)
    assert drift.y == pytest.approx(0.5000084, abs=1e-7)
    assert drift.t == pytest.approx(1e-4)
    assert advance_diffusion(params, 1e-4, s, 1.0) == drift
    inner = State(0.0, 1.0, 0.5)
    quiet = advance_diffusion(params, 1e-4, inner, 0.0)
    kicked = advance_diffusion(params, 1e-4, inner, 1.0)
    assert kicked.x < quiet.x
    assert kicked.y > quiet.y
    assert (quiet.x - kicked.x) / (kicked.y - quiet.y) == pytest.approx(2 / params.eps)


def test_barrier() -> None:
    """
    Tests that prey at one individual is absorbed and the predator then only decays.
    """
    params = ModelParams()
    s = State(0.0, 1e-6, 0.5)
    absorbed = advance_diffusion(params, 1e-4, s, 3.0)
    assert absorbed.x == 0.0
    assert absorbed.y == pytest.approx(decay(params, 0.0, 1e-4, 0.5))
    rng = RngStream(5)
    before = rng.generator.bit_generator.state
    step_diffusion(params, DiffusionConfig(), s, rng)
    assert rng.generator.bit_generator.state == before


def test_noiseless_matches_ode() -> None:
    """
    Tests that the noiseless diffusion run and the deterministic run agree bit for bit.
    """
    params = ModelParams()
    init = State(0.0, 2.0, 0.5)
    noisy = simulate_diffusion(params, DiffusionConfig(dt=1e-4, noiseless=True), init, 100.0, 0.01, RngStream(3))
    deterministic = simulate_ode(params, init, 100.0, 1e-4, 0.01)
    assert noisy.termination == Termination.RAN_TO_HORIZON
    assert np.array_equal(noisy.t, deterministic.t)
    assert np.array_equal(noisy.x, deterministic.x)
    assert np.array_equal(noisy.y, deterministic.y)


def test_extinction_tail() -> None:
    """
    Tests that the time between absorption and extinction is the closed-form decay time within 2 dt.
    """
    params = ModelParams(omega=1e5)
    cfg = DiffusionConfig(dt=1e-4)
    extinct = 0
    for index in range(5):
        trajectory = simulate_diffusion(params, cfg, State(0.0, 2.0, 0.5), 200.0, 0.1, RngStream(11).spawn(index))
        if trajectory.termination != Termination.PREDATOR_EXTINCT or 'absorption_time' not in trajectory.diagnostics:
            continue
        extinct += 1
        absorbed_at = trajectory.diagnostics['absorption_time']
        tail = math.log(params.omega * trajectory.diagnostics['absorption_y']) / params.constant_m
        assert abs(trajectory.extinction_time - absorbed_at - tail) <= 2 * cfg.dt
        after = trajectory.t > absorbed_at
        assert np.all(trajectory.x[after] == 0)
    assert extinct > 0


def test_reproducible_runs() -> None:
    """
    Tests that a stream reproduces its run and a different stream does not.
    """
    params = ModelParams(omega=1e6)
    init = State(0.0, 2.0, 0.5)
    first = simulate_diffusion(params, DiffusionConfig(dt=1e-3), init, 10.0, 0.1, RngStream(1))
    second = simulate_diffusion(params, DiffusionConfig(dt=1e-3), init, 10.0, 0.1, RngStream(1))
    other = simulate_diffusion(params, DiffusionConfig(dt=1e-3), init, 10.0, 0.1, RngStream(2))
    assert np.array_equal(first.x, second.x)
    assert not np.array_equal(first.x, other.x)
    assert first.diagnostics['clamp_count'] == 0


def test_edge_cases() -> None:
    """
    Tests a zero horizon, a predator already extinct and invalid settings.
    """
    params = ModelParams()
    single = simulate_diffusion(params, DiffusionConfig(), State(0.0, 2.0, 0.5), 0.0, 0.01, RngStream(0))
    assert len(single) == 1
    assert single.termination == Termination.RAN_TO_HORIZON
    gone = simulate_diffusion(params, DiffusionConfig(), State(0.0, 2.0, 1e-7), 10.0, 0.01, RngStream(0))
    assert gone.termination == Termination.PREDATOR_EXTINCT
    assert gone.extinction_time == 0.0
    with pytest.raises(ValidationError):
        DiffusionConfig(dt=0.0)
    with pytest.raises(ValidationError):
        DiffusionConfig(hybrid_threshold=0.5)
    with pytest.raises(ValidationError):
        simulate_diffusion(params, DiffusionConfig(), State(5.0, 2.0, 0.5), 1.0, 0.01, RngStream(0))


def test_seasonal_mortality_run() -> None:
    """
    Tests that a cosine mortality runs and differs from the constant one.
    """
    seasonal = ModelParams(mortality=CosineMortality(0.6175, 0.047, 0.1), omega=1e12)
    init = State(0.0, 2.0, 0.5)
    forced = simulate_diffusion(seasonal, DiffusionConfig(dt=1e-3), init, 20.0, 0.1, RngStream(0))
    constant = simulate_diffusion(seasonal.replace(mortality=CosineMortality(0.6645, 0.0, 0.1)),
                                  DiffusionConfig(dt=1e-3), init, 20.0, 0.1, RngStream(0))
    assert len(forced) == len(constant)
    assert not np.allclose(forced.y, constant.y)


def test_hybrid_mode() -> None:
    """
    Tests that a hybrid run hands over to the jump process near the barrier and keeps its records consistent.
    """
    params = ModelParams(omega=1e5)
    cfg = DiffusionConfig(dt=1e-4, hybrid_threshold=1e3)
    trajectory = simulate_hybrid(params, cfg, State(0.0, 2.0, 0.5), 100.0, 0.1, RngStream(4))
    assert trajectory.diagnostics['switches'] >= 1
    assert trajectory.diagnostics['events'] > 0
    assert np.all(np.diff(trajectory.t) > 0)
    assert np.all(trajectory.x >= 0)
    plain = simulate_hybrid(params, DiffusionConfig(dt=1e-4), State(0.0, 2.0, 0.5), 10.0, 0.1, RngStream(4))
    assert 'switches' not in plain.diagnostics


def test_hybrid_without_threshold_is_diffusion() -> None:
    """
    Tests that a hybrid run without a threshold reproduces the diffusion run bit for bit.
    """
    params = ModelParams(omega=1e5)
    init = State(0.0, 2.0, 0.5)
    cfg = DiffusionConfig(dt=1e-4)
    hybrid = simulate_hybrid(params, cfg, init, 20.0, 0.1, RngStream(6))
    diffusion = simulate_diffusion(params, cfg, init, 20.0, 0.1, RngStream(6))
    assert np.array_equal(hybrid.t, diffusion.t)
    assert np.array_equal(hybrid.x, diffusion.x)
    assert np.array_equal(hybrid.y, diffusion.y)
    assert hybrid.termination == diffusion.termination
    assert hybrid.diagnostics == diffusion.diagnostics


def test_hybrid_starts_below_threshold() -> None:
    """
    Tests that a start at a single prey individual begins in the jump process instead of the barrier.
    """
    params = ModelParams(omega=1e4)
    cfg = DiffusionConfig(dt=1e-4, hybrid_threshold=1e3)
    trajectory = simulate_hybrid(params, cfg, State(0.0, 1e-4, 0.5), 1.0, 0.1, RngStream(8))
    assert trajectory.diagnostics['switches'] >= 1
    assert trajectory.diagnostics['events'] > 0
    assert trajectory.x[0] == pytest.approx(1e-4)
    plain = simulate_diffusion(params, cfg, State(0.0, 1e-4, 0.5), 1.0, 0.1, RngStream(8))
    assert plain.x[-1] == 0.0


def test_mean_follows_deterministic_run() -> None:
    """
    Tests that the ensemble mean at a short time sits on the deterministic run within its standard error.
    """
    params = ModelParams(omega=1e6)
    init = State(0.0, 1.0, 0.5)
    cfg = DiffusionConfig(dt=1e-3)
    n_runs = 100
    ends = [simulate_diffusion(params, cfg, init, 0.5, 0.1, RngStream(21).spawn(i)).final for i in range(n_runs)]
    deterministic = simulate_ode(params, init, 0.5, 1e-3, 0.1).final
    for values, expected in ((np.array([s.x for s in ends]), deterministic.x),
                             (np.array([s.y for s in ends]), deterministic.y)):
        error = values.std(ddof=1) / math.sqrt(n_runs)
        assert abs(values.mean() - expected) <= 4 * error + 1e-6
