import pandas as pd
import pytest

from attofox.context import context
from attofox.jump import RngStream, splitmix64

"""
Tests context getting and the run description.
"""

# Load the test settings module.
context.set_settings_module('attofox.test_settings')

settings = context.get_settings()


def test_context() -> None:
    """
    Tests the options for getting data references from context.
    """
    context.clear_data_references()
    for omega in ('1e5', '1e6', '1e7'):
        context.set_data_reference(f'ensemble_{omega}', f'Extinction statistics at omega = {omega}')
    context.set_data_reference('params', 'Not an ensemble.')
    assert context.get_data_reference('ensemble_1e6') == 'Extinction statistics at omega = 1e6'
    data = context.get_data_reference('^ensemble_')
    assert type(data) is dict
    assert len(data.keys()) == 3
    data = context.get_data_reference(['params', 'ensemble_1e7'])
    assert type(data) is dict
    assert len(data.keys()) == 2
    for bad_request in ('Noids', 7, ['Still', 'Nope']):
        with pytest.raises((KeyError, TypeError)):
            context.get_data_reference(bad_request)


def test_run_description() -> None:
    """
    Tests the header record and the summary printed with errors.
    """
    context.clear_data_references()
    context.set_flow_id('table1')
    context.set_run_config({'n_runs': 200}, master_seed=5)
    header = context.describe_run()
    assert (header['command'], header['config'], header['seed']) == ('table1', {'n_runs': 200}, 5)
    assert 'splitmix64(i)' in header['seed_derivation']
    assert RngStream(5).spawn(3).seed == 5 ^ splitmix64(3)
    context.set_data_reference('table1', pd.DataFrame({'omega': [1e5], 'p_ext': [1.0]}))
    summary = context.summarize_data_references()
    assert '"seed": 5' in summary
    assert "table1: DataFrame (1, 2) ['omega', 'p_ext']" in summary


def test_missing_settings_module() -> None:
    """
    Tests the message for a settings module that does not exist.
    """
    context.set_settings_module('attofox.no_such_settings')
    try:
        with pytest.raises(ModuleNotFoundError, match='example_settings.py'):
            context.get_settings()
    finally:
        context.set_settings_module('attofox.test_settings')
