import math

import numpy as np
import pytest

from attofox import analysis
from attofox.context import context
from attofox.diffusion import DiffusionConfig
from attofox.exceptions import BracketError, NoCycleError, ValidationError
from attofox.model import ConstantMortality, CosineMortality, ModelParams, State, equilibrium, noise_amplitudes

"""
Tests the ensembles, cycles, funnel and comparisons built on the integrators.

Tests marked slow reproduce the published trends at desk scale; run them with pytest -m slow.
"""

context.set_settings_module('attofox.test_settings')

COARSE = DiffusionConfig(dt=1e-3)


def test_extinct_at_start() -> None:
    """
    Tests the statistics of an ensemble whose predator is gone from the start.
    """
    params = ModelParams()
    init = State(0.0, 2.0, 1e-7)
    stats = analysis.ensemble_extinction(params, 3, 10.0, 0, init, COARSE)
    assert (stats.n_runs, stats.n_extinct, stats.p_ext) == (3, 3, 1.0)
    assert stats.mean_T == 0.0
    assert stats.std_T == 0.0
    single = analysis.ensemble_extinction(params, 1, 10.0, 0, init, COARSE)
    assert single.std_T == 0.0


def test_persistent_ensemble() -> None:
    """
    Tests an ensemble where nothing goes extinct: no mean and no spread.
    """
    stats = analysis.ensemble_extinction(ModelParams(omega=1e12), 2, 5.0, 0, cfg=COARSE)
    assert stats.n_extinct == 0
    assert stats.p_ext == 0.0
    assert stats.mean_T is None
    assert stats.std_T is None
    assert stats.to_record()['mean_T'] is None


def test_ensemble_validation() -> None:
    """
    Tests rejected ensemble requests.
    """
    with pytest.raises(ValidationError):
        analysis.ensemble_extinction(ModelParams(), 0)
    with pytest.raises(ValidationError):
        analysis.ensemble_extinction(ModelParams(), 1, integrator='jump')
    with pytest.raises(ValidationError):
        analysis.extinction_table(ModelParams(), omegas=())


def test_ensembles_do_not_depend_on_workers() -> None:
    """
    Tests that the worker count and a rerun leave the statistics untouched.
    """
    params = ModelParams(omega=1e5)
    serial = analysis.ensemble_extinction(params, 4, 100.0, 9, cfg=COARSE, workers=1)
    parallel = analysis.ensemble_extinction(params, 4, 100.0, 9, cfg=COARSE, workers=2)
    again = analysis.ensemble_extinction(params, 4, 100.0, 9, cfg=COARSE, workers=1)
    assert serial == parallel == again


def test_extinction_table_layout() -> None:
    """
    Tests the columns and row order of the extinction table.
    """
    table = analysis.extinction_table(ModelParams(), omegas=(1e12, 1e11), n_runs=1, horizon=2.0, cfg=COARSE)
    assert list(table.columns) == ['omega', 'n_runs', 'n_extinct', 'p_ext', 'mean_T', 'std_T']
    assert list(table['omega']) == [1e12, 1e11]
    assert list(table['n_extinct']) == [0, 0]


def test_cycle_regimes() -> None:
    """
    Tests the three regimes of the deterministic scheme: a small cycle, a large cycle and a stable focus.
    """
    small = analysis.find_limit_cycle(ModelParams())
    assert small.classification == 'small'
    assert small.min_x > 1e-3
    assert small.period > 0
    assert small.x[0] == pytest.approx(equilibrium(ModelParams())[0], abs=1e-2)
    large = analysis.find_limit_cycle(ModelParams(mortality=ConstantMortality(0.6)))
    assert large.is_large
    assert 1e-10 < large.min_x < 1e-8
    with pytest.raises(NoCycleError):
        analysis.find_limit_cycle(ModelParams(mortality=ConstantMortality(0.75)))
    with pytest.raises(NoCycleError):
        analysis.find_limit_cycle(ModelParams(mortality=ConstantMortality(0.9)))
    assert analysis.classify_cycle(ModelParams(mortality=ConstantMortality(0.6))) == 'large'


def test_cycles_survive_halving_dt() -> None:
    """
    Tests that the regime, the period and the depth of a cycle barely move when dt is halved.
    """
    params = ModelParams(mortality=ConstantMortality(0.6))
    coarse = analysis.find_limit_cycle(params, dt=1e-4)
    fine = analysis.find_limit_cycle(params, dt=5e-5)
    assert coarse.classification == fine.classification == 'large'
    assert fine.period == pytest.approx(coarse.period, rel=1e-2)
    assert fine.min_x == pytest.approx(coarse.min_x, rel=5e-2)
    assert analysis.classify_cycle(ModelParams(), dt=5e-5) == analysis.classify_cycle(ModelParams()) == 'small'
    with pytest.raises(NoCycleError):
        analysis.find_limit_cycle(ModelParams(mortality=ConstantMortality(0.75)), dt=5e-5)


def test_deep_prey_minimum() -> None:
    """
    Tests that a start high above the fold dives far below one individual.
    """
    params = ModelParams(mortality=ConstantMortality(0.6))
    minimum = analysis.min_prey_of_trajectory(params, State(0.0, 2.0, 0.95))
    assert minimum.x < 1e-12
    assert minimum.t > 0
    with pytest.raises(ValidationError):
        analysis.min_prey_of_trajectory(params, State(0.0, 0.0, 0.95))


def test_safety_trajectory() -> None:
    """
    Tests the bisection for the start whose prey minimum is 1000 individuals at omega = 1e6.
    """
    params = ModelParams()
    y0_star = analysis.find_safety_trajectory(params, 1e-3)
    assert 0.5 < y0_star < 1.0
    minimum = analysis.min_prey_of_trajectory(params, State(0.0, analysis.FAR_X, y0_star), method='euler')
    assert minimum.x == pytest.approx(1e-3, rel=1e-2)
    with pytest.raises(ValidationError):
        analysis.find_safety_trajectory(params, 0.9)
    with pytest.raises(BracketError):
        analysis.find_safety_trajectory(params, 1e-3, bracket=(0.9, 1.0))
    assert analysis.find_safety_trajectory(params, 2e-3) < y0_star


def test_funnel_width() -> None:
    """
    Tests one funnel report and the error marker of an omega whose alpha is out of range.
    """
    params = ModelParams()
    report = analysis.funnel_width(params, 1e8)
    assert report.alpha == pytest.approx(1e-5)
    assert report.rho > 0
    assert report.cycle_point[0] >= equilibrium(params)[0]
    expected = noise_amplitudes(params.replace(omega=1e8), State(0.0, *report.cycle_point), 1e-4)
    assert (report.sigma_x_local, report.sigma_y_local) == pytest.approx(expected)
    assert report.sigma_x_local / report.sigma_y_local == pytest.approx(2 / params.eps)
    table = analysis.funnel_table(params, (1e3,))
    assert table.loc[0, 'status'].startswith('error')
    assert math.isnan(table.loc[0, 'rho'])


def test_canard_bracket_checks() -> None:
    """
    Tests that the canard search rejects brackets that do not straddle it.
    """
    with pytest.raises(ValidationError):
        analysis.find_canard_m(ModelParams(), (0.6645, 0.6644))
    with pytest.raises(BracketError):
        analysis.find_canard_m(ModelParams(), (0.6, 0.61))


def test_canard_bracket_ends() -> None:
    """
    Tests that the default bracket straddles the explosion: large cycle at 0.6644, small at 0.6645.
    """
    result = analysis.find_canard_m(ModelParams(), width=2e-5)
    first, second = result.history[0:2]
    assert (first['m'], first['classification']) == (0.6644, 'large')
    assert (second['m'], second['classification']) == (0.6645, 'small')
    assert first['min_x'] < 1e-3 < second['min_x']
    assert abs(result.m_star - 0.66442561) <= 1e-4
    with pytest.raises(BracketError):
        analysis.find_canard_m(ModelParams(), threshold=1e-6)


def test_compare_processes_layout() -> None:
    """
    Tests the comparison table at a small scale and the empty request.
    """
    empty = analysis.compare_processes([ModelParams(omega=1e3)], 0)
    assert empty.empty
    assert list(empty.columns) == analysis.COMPARISON_COLUMNS
    table = analysis.compare_processes([ModelParams(omega=1e3)], 3, horizon=2.0, checkpoints=(1.0,), cfg=COARSE)
    assert len(table) == 2
    assert list(table['variable']) == ['x', 'y']
    assert (table['std_jump'] >= 0).all()


def test_phase_portrait() -> None:
    """
    Tests the fan of deterministic trajectories and their minima records.
    """
    params = ModelParams()
    frame, minima = analysis.phase_portrait(params, (0.5, 0.95), horizon=3.0, sample_stride=0.1)
    assert list(frame.columns) == ['label', 'y0', 't', 'x', 'y', 'xi']
    assert set(frame['label']) == {0, 1}
    assert [record['y0'] for record in minima] == [0.5, 0.95]
    deep = minima[1]
    assert deep['below_1e-9'] and deep['below_1e-6']
    assert deep['t_min'] > 0


def test_seasonal_comparison() -> None:
    """
    Tests that a very large population follows the deterministic run under a cosine mortality.
    """
    params = ModelParams(mortality=CosineMortality(0.6175, 0.047, 0.1))
    frame, summaries = analysis.seasonal_comparison(params, (1e12,), horizon=5.0, cfg=COARSE, sample_stride=0.5)
    assert set(frame['process']) == {'ode', 'diffusion'}
    assert summaries[0]['termination'] == 'ran-to-horizon'
    assert summaries[0]['extinction_time'] is None
    assert summaries[0]['sup_gap'] < 1e-3


@pytest.mark.slow
def test_table1_trend() -> None:
    """
    Tests the extinction table at desk scale: certain extinction for small omega, none for large.
    """
    params = ModelParams()
    omegas = (1e5, 1e6, 1e7, 2e7)
    table = analysis.extinction_table(params, omegas=omegas, n_runs=200, horizon=1000.0, master_seed=1)
    p_ext = list(table['p_ext'])
    assert p_ext[0] == 1.0
    assert 25 <= table.loc[0, 'mean_T'] <= 40
    assert p_ext[1] == 1.0
    assert 30 <= table.loc[1, 'mean_T'] <= 55
    assert 0.70 <= p_ext[2] <= 0.97
    assert p_ext[3] <= 0.05
    band = 2.576 * np.sqrt(0.25 / 200)
    assert all(later <= earlier + 2 * band for earlier, later in zip(p_ext, p_ext[1:]))


@pytest.mark.slow
def test_table2_funnel() -> None:
    """
    Tests that the funnel narrows with omega and stays within a factor of 3 of the published widths.
    """
    table = analysis.funnel_table(ModelParams(), analysis.TABLE2_OMEGAS)
    assert (table['status'] == 'ok').all()
    rho = list(table['rho'])
    assert all(value > 0 for value in rho)
    assert all(later < earlier for earlier, later in zip(rho, rho[1:]))
    for value, published in zip(rho, (1.2e-3, 9.0e-5, 5.5e-5, 5.3e-5)):
        assert published / 3 <= value <= published * 3


@pytest.mark.slow
def test_canard_value() -> None:
    """
    Tests the bisected canard value and the sharpness of the explosion.
    """
    result = analysis.find_canard_m(ModelParams())
    assert abs(result.m_star - 0.66442561) <= 1e-4
    assert result.bracket[1] - result.bracket[0] <= 1e-6
    classes = {record['classification'] for record in result.history}
    assert classes == {'large', 'small'}


@pytest.mark.slow
def test_jump_and_diffusion_agree() -> None:
    """
    Tests that the checkpoint means of the two processes agree within 3 combined standard errors.
    """
    table = analysis.compare_processes([ModelParams(omega=1e4), ModelParams(omega=1e5)], 100, master_seed=3)
    assert len(table) == 12
    assert (table['z'].abs() <= 3).all()
