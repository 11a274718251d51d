import settings
from attofox import analysis
from attofox.context import context
from attofox.decorators import flow, input_data, output_data, task
from attofox.diffusion import DiffusionConfig
from attofox.model import ModelParams

"""
A small sample flow: a shortened extinction table written next to the parameters it was run with.

It expects a settings.py on the path, see example_settings.py.
"""


@input_data
def get_params() -> dict:
    """
    Loads the model constants, falling back to the defaults.
    """
    return {
        settings.params_dir: {
            'params': {
                'optional': True,
                'file': 'default.cfg',
                'default': ModelParams(),
            },
        },
    }


@task
def extinction_table():
    """
    A few omegas of the extinction table with small ensembles.

    Notes
    -----
    Desk scale: the full table runs 200 simulations per omega over a horizon of 1000.
    """
    params = context.get_data_reference('params')
    table = analysis.extinction_table(params, omegas=(1e5, 1e6, 1e7), n_runs=20, horizon=200.0, master_seed=7,
                                      cfg=DiffusionConfig(dt=1e-3))
    context.set_data_reference('table1_sample', table)


@output_data
def output_data() -> dict:
    """
    Outputs the table as csv and JSON lines.
    """
    return {
        settings.output_dir: {
            'table1_sample': {
                'formats': ('csv', 'jsonl'),
                'output_kwargs': {'header': context.describe_run(), 'na_rep': 'NA'},
            },
        },
    }


@flow
def run_flow() -> None:
    """
    Executes our flow in the defined sequence.
    """
    get_params()
    extinction_table()
    output_data()


if __name__ == '__main__':
    context.set_settings_module('settings')
    context.set_run_config({'omegas': [1e5, 1e6, 1e7], 'n_runs': 20, 'horizon': 200.0}, master_seed=7)
    run_flow()
