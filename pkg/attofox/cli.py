import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import pandas as pd

from attofox import analysis, logger
from attofox.context import context
from attofox.decorators import flow, input_data, output_data, task
from attofox.diffusion import DiffusionConfig, simulate_diffusion, simulate_hybrid
from attofox.exceptions import ValidationError
from attofox.jump import RngStream, simulate_jump
from attofox.model import COSINE_KEYS, PARAMETER_KEYS, ModelParams, State, params_from_mapping
from attofox.ode import simulate_ode, to_log_chart
from attofox.trajectory import Trajectory

"""
The attofox command line: one subcommand per experiment, CSV and JSON lines out.

Exit codes: 0 success, 1 validation error, 2 numeric or other runtime error, 3 I/O error.
"""

INTEGRATORS = ('jump', 'diffusion', 'hybrid', 'ode')
SEASONAL_SCHEDULE = {'m_a0': 0.6175, 'm_b0': 0.047, 'm_rate': 0.1}


class ArgumentParser(argparse.ArgumentParser):
    """
    Raises ValidationError instead of exiting, so bad flags map onto exit code 1 like any bad input.
    """

    def error(self, message):
        raise ValidationError(f'{self.prog}: {message}')


@dataclass
class RunConfig(object):
    """
    Everything a command needs, resolved from flags and defaults.
    """

    command: str
    params_file: str | None = None
    overrides: dict = field(default_factory=dict)
    integrator: str = 'diffusion'
    dt: float = 1e-4
    horizon: float = 200.0
    sample_stride: float = 0.01
    seed: int = 0
    n_runs: int = 1
    output: str | None = None
    name: str | None = None
    omegas: tuple = ()
    x0: float = 2.0
    y0: float = 0.5
    hybrid_threshold: float | None = None
    bracket: tuple = (0.6644, 0.6645)
    width: float = 1e-9
    checkpoints: tuple = (1.0, 5.0, 10.0)
    y_values: tuple | None = None

    def validate(self) -> None:
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f'Unknown integrator {self.integrator}.')
        for name in ('dt', 'sample_stride', 'width'):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f'{name} must be positive and finite, received {value}.')
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValidationError(f'horizon must be nonnegative and finite, received {self.horizon}.')
        if self.seed < 0 or self.n_runs < 0:
            raise ValidationError(f'seed and n_runs must be nonnegative, received {self.seed} and {self.n_runs}.')
        if any(not omega >= 1 for omega in self.omegas):
            raise ValidationError(f'Every omega must be at least 1, received {list(self.omegas)}.')
        if self.x0 < 0 or self.y0 < 0:
            raise ValidationError(f'The start must be nonnegative, received ({self.x0}, {self.y0}).')
        if self.hybrid_threshold is not None and self.hybrid_threshold < 1:
            raise ValidationError(f'hybrid_threshold must be at least 1, received {self.hybrid_threshold}.')

    def diffusion_config(self) -> DiffusionConfig:
        threshold = self.hybrid_threshold
        if self.integrator == 'hybrid' and threshold is None:
            threshold = 1e3
        return DiffusionConfig(self.dt, threshold)

    def to_record(self) -> dict:
        return {key: list(value) if isinstance(value, tuple) else value for key, value in asdict(self).items()}


def apply_overrides(params: ModelParams, overrides: dict) -> ModelParams:
    """
    An input filter: flag values replace the ones read from the parameter file.
    """
    if not overrides:
        return params
    return params_from_mapping(overrides, base=params)


@input_data
def load_params(cfg: RunConfig) -> dict:
    """
    Loads the parameter file, or the defaults without one, and applies the flag overrides.
    """
    directory, file = '.', None
    if cfg.params_file:
        directory, file = os.path.split(cfg.params_file)
    return {
        directory or '.': {
            'params': {
                'file': file,
                'optional': cfg.params_file is None,
                'default': ModelParams(),
                'filters': {apply_overrides: cfg.overrides},
            },
        },
    }


@output_data
def write_assets(directory: str, assets: dict) -> dict:
    """
    Writes context data references; assets maps a file name to its formats, data and output kwargs.
    """
    return {directory: assets}


def _resolved_params() -> ModelParams:
    params = context.get_data_reference('params')
    context.run_config['params'] = params.to_mapping()
    return params


def _output_dir(cfg: RunConfig) -> str:
    return cfg.output or context.get_settings().output_dir


@task
def integrate(params: ModelParams, cfg: RunConfig) -> Trajectory:
    """
    Runs the selected integrator from (x0, y0).
    """
    init = State(0.0, cfg.x0, cfg.y0)
    if cfg.integrator == 'ode':
        return simulate_ode(params, init, cfg.horizon, cfg.dt, cfg.sample_stride)
    rng = RngStream(cfg.seed)
    if cfg.integrator == 'jump':
        return simulate_jump(params, init, cfg.horizon, cfg.sample_stride, rng)
    if cfg.integrator == 'hybrid':
        return simulate_hybrid(params, cfg.diffusion_config(), init, cfg.horizon, cfg.sample_stride, rng)
    return simulate_diffusion(params, cfg.diffusion_config(), init, cfg.horizon, cfg.sample_stride, rng)


def cmd_simulate(cfg: RunConfig) -> int:
    """
    Writes one trajectory as t,x,y,xi, the termination cause in the trailing record.
    """
    @flow(flow_id='simulate')
    def run():
        load_params(cfg)
        params = _resolved_params()
        trajectory = integrate(params, cfg)
        if trajectory.diagnostics.get('clamp_count'):
            logger.warning(f'Negative predator values were clamped {trajectory.diagnostics["clamp_count"]} times.')
        dropped = to_log_chart(params, trajectory).dropped
        if dropped:
            logger.warning(f'{dropped} samples have x = 0 and no log chart value.')
        name = cfg.name or 'trajectory'
        context.set_data_reference(name, trajectory.to_frame(params.eps))
        footer = {'termination': trajectory.termination.value, **trajectory.diagnostics}
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv',), 'output_kwargs': {'header': context.describe_run(), 'footer': footer}},
        })

    return run()


@task
def extinction_row(params: ModelParams, cfg: RunConfig) -> dict:
    stats = analysis.ensemble_extinction(params, cfg.n_runs, cfg.horizon, cfg.seed, State(0.0, cfg.x0, cfg.y0),
                                         cfg.diffusion_config(), 'hybrid' if cfg.integrator == 'hybrid' else 'diffusion')
    return stats.to_record()


def cmd_table1(cfg: RunConfig) -> int:
    """
    One extinction ensemble per omega: omega, n_runs, n_extinct, p_ext, mean_T, std_T.
    """
    @flow(flow_id='table1')
    def run():
        load_params(cfg)
        params = _resolved_params()
        if not cfg.omegas:
            raise ValidationError('The omega list is empty.')
        records = [extinction_row(params.replace(omega=omega), cfg, task_description=f'ensemble omega={omega:g}')
                   for omega in cfg.omegas]
        name = cfg.name or 'table1'
        context.set_data_reference(name, pd.DataFrame.from_records(records))
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv', 'jsonl'),
                   'output_kwargs': {'header': context.describe_run(), 'na_rep': 'NA'}},
        })

    return run()


@task
def funnel_rows(params: ModelParams, cfg: RunConfig) -> pd.DataFrame:
    return analysis.funnel_table(params, cfg.omegas, cfg.dt)


def cmd_table2(cfg: RunConfig) -> int:
    """
    The funnel width and local noise per omega; rows whose alpha is out of range carry an error status.
    """
    @flow(flow_id='table2')
    def run():
        load_params(cfg)
        params = _resolved_params()
        if not cfg.omegas:
            raise ValidationError('The omega list is empty.')
        table = funnel_rows(params, cfg)
        logger.warning('sigma_x and sigma_y are per step amplitudes at dt = 1e-4, sqrt(dt) already included; '
                       'they scale as omega^-1/2 from row to row.')
        for row in table.itertuples():
            if row.status != 'ok':
                logger.warning(f'omega={row.omega:g} replaced by an error marker: {row.status}')
        name = cfg.name or 'table2'
        context.set_data_reference(name, table)
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv', 'jsonl'),
                   'output_kwargs': {'header': context.describe_run(), 'na_rep': 'NA'}},
        })

    return run()


@task
def canard_search(params: ModelParams, cfg: RunConfig) -> analysis.CanardResult:
    return analysis.find_canard_m(params, cfg.bracket, cfg.width, cfg.dt)


def cmd_canard(cfg: RunConfig) -> int:
    """
    Bisects the canard value of m; emits m_star then every classification of the search.
    """
    @flow(flow_id='canard')
    def run():
        load_params(cfg)
        params = _resolved_params()
        result = canard_search(params, cfg)
        logger.info(f'm_star = {result.m_star:.10f}')
        records = [{'m_star': result.m_star, 'lower': result.bracket[0], 'upper': result.bracket[1]}]
        records += result.history
        name = cfg.name or 'canard'
        context.set_data_reference(name, records)
        write_assets(_output_dir(cfg), {
            name: {'formats': ('jsonl',), 'output_kwargs': {'header': context.describe_run()}},
        })

    return run()


@task
def process_comparison(params: ModelParams, cfg: RunConfig) -> pd.DataFrame:
    return analysis.compare_processes([params.replace(omega=omega) for omega in cfg.omegas], cfg.n_runs,
                                      State(0.0, cfg.x0, cfg.y0), cfg.horizon, cfg.checkpoints, cfg.seed,
                                      cfg.diffusion_config())


def cmd_compare(cfg: RunConfig) -> int:
    """
    The jump process against the diffusion approximation at a few checkpoints, per omega.
    """
    @flow(flow_id='compare')
    def run():
        load_params(cfg)
        params = _resolved_params()
        table = process_comparison(params, cfg)
        name = cfg.name or 'compare'
        context.set_data_reference(name, table)
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv',), 'output_kwargs': {'header': context.describe_run(), 'na_rep': 'NA'}},
        })

    return run()


@task
def seasonal_runs(params: ModelParams, cfg: RunConfig) -> tuple:
    return analysis.seasonal_comparison(params, cfg.omegas, cfg.horizon, cfg.seed, cfg.diffusion_config(),
                                        State(0.0, cfg.x0, cfg.y0), cfg.sample_stride)


def cmd_seasonal(cfg: RunConfig) -> int:
    """
    Deterministic and diffusion runs under the cosine mortality schedule.
    """
    @flow(flow_id='seasonal')
    def run():
        load_params(cfg)
        params = _resolved_params()
        frame, summaries = seasonal_runs(params, cfg)
        name = cfg.name or 'seasonal'
        context.set_data_reference(name, frame)
        context.set_data_reference(f'{name}_summary', summaries)
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv',), 'output_kwargs': {'header': context.describe_run()}},
            f'{name}_summary': {'formats': ('jsonl',), 'output_kwargs': {'header': context.describe_run()}},
        })

    return run()


@task
def portrait_fan(params: ModelParams, cfg: RunConfig) -> tuple:
    return analysis.phase_portrait(params, cfg.y_values, cfg.horizon, cfg.dt, cfg.sample_stride)


def cmd_portrait(cfg: RunConfig) -> int:
    """
    The fan of deterministic trajectories from (2, y0) with their first prey minima.
    """
    @flow(flow_id='portrait')
    def run():
        load_params(cfg)
        params = _resolved_params()
        frame, minima = portrait_fan(params, cfg)
        name = cfg.name or 'portrait'
        context.set_data_reference(name, frame)
        context.set_data_reference(f'{name}_minima', minima)
        write_assets(_output_dir(cfg), {
            name: {'formats': ('csv',), 'output_kwargs': {'header': context.describe_run()}},
            f'{name}_minima': {'formats': ('jsonl',), 'output_kwargs': {'header': context.describe_run()}},
        })

    return run()


COMMANDS = {
    'simulate': cmd_simulate,
    'table1': cmd_table1,
    'table2': cmd_table2,
    'canard': cmd_canard,
    'compare': cmd_compare,
    'seasonal': cmd_seasonal,
    'portrait': cmd_portrait,
}


def _common_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--params', dest='params_file', help='A key = value parameter file.')
    for key in PARAMETER_KEYS:
        common.add_argument(f'--{key.replace("_", "-")}', dest=key, type=float, help=f'Overrides {key}.')
    common.add_argument('--settings', help='The settings module, attofox.default_settings by default.')
    common.add_argument('--quiet', action='store_true', help='No console output.')
    common.add_argument('--output', help='The output directory, settings.output_dir by default.')
    common.add_argument('--name', help='The output file name, without extension.')
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--dt', type=float, help='The Euler step, settings.default_dt by default.')
    return common


def build_parser() -> ArgumentParser:
    """
    The parser of every subcommand; flags mirror parameter keys one to one.
    """
    common = _common_parser()
    parser = ArgumentParser(prog='attofox', description='Prey-predator extinction experiments.')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    simulate = commands.add_parser('simulate', parents=[common], help='Writes one trajectory.')
    simulate.add_argument('--integrator', choices=INTEGRATORS, default='diffusion')
    simulate.add_argument('--horizon', type=float, default=200.0)
    simulate.add_argument('--stride', dest='sample_stride', type=float, default=0.01)
    simulate.add_argument('--x0', type=float, default=2.0)
    simulate.add_argument('--y0', type=float, default=0.5)
    simulate.add_argument('--hybrid-threshold', type=float)

    table1 = commands.add_parser('table1', parents=[common], help='Extinction ensembles per omega.')
    table1.add_argument('--omegas', type=float, nargs='+', default=list(analysis.TABLE1_OMEGAS))
    table1.add_argument('--n-runs', type=int, default=200)
    table1.add_argument('--horizon', type=float, default=1000.0)
    table1.add_argument('--integrator', choices=('diffusion', 'hybrid'), default='diffusion')
    table1.add_argument('--x0', type=float, default=2.0)
    table1.add_argument('--y0', type=float, default=0.5)
    table1.add_argument('--hybrid-threshold', type=float)

    table2 = commands.add_parser('table2', parents=[common], help='Funnel width per omega.')
    table2.add_argument('--omegas', type=float, nargs='+', default=list(analysis.TABLE2_OMEGAS))

    canard = commands.add_parser('canard', parents=[common], help='Bisects the canard value of m.')
    canard.add_argument('--lower', type=float, default=0.6644)
    canard.add_argument('--upper', type=float, default=0.6645)
    canard.add_argument('--width', type=float, default=1e-9)

    compare = commands.add_parser('compare', parents=[common], help='Jump process against diffusion.')
    compare.add_argument('--omegas', type=float, nargs='+', default=[1e4, 1e5])
    compare.add_argument('--n-runs', type=int, default=10)
    compare.add_argument('--horizon', type=float, default=20.0)
    compare.add_argument('--checkpoints', type=float, nargs='+', default=[1.0, 5.0, 10.0])
    compare.add_argument('--x0', type=float, default=0.2)
    compare.add_argument('--y0', type=float, default=0.6)

    seasonal = commands.add_parser('seasonal', parents=[common], help='Runs under a cosine mortality.')
    seasonal.add_argument('--omegas', type=float, nargs='+', default=list(analysis.SEASONAL_OMEGAS))
    seasonal.add_argument('--horizon', type=float, default=300.0)
    seasonal.add_argument('--stride', dest='sample_stride', type=float, default=0.01)
    seasonal.add_argument('--x0', type=float, default=2.0)
    seasonal.add_argument('--y0', type=float, default=0.5)

    portrait = commands.add_parser('portrait', parents=[common], help='The deterministic phase portrait fan.')
    portrait.add_argument('--horizon', type=float, default=50.0)
    portrait.add_argument('--stride', dest='sample_stride', type=float, default=0.01)
    portrait.add_argument('--y-values', type=float, nargs='+')
    return parser


def _default_dt(dt: float | None) -> float:
    if dt is not None:
        return dt
    return float(getattr(context.get_settings(), 'default_dt', 1e-4))


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Turns parsed flags into a validated RunConfig.
    """
    values = vars(args)
    overrides = {key: values[key] for key in PARAMETER_KEYS if values.get(key) is not None}
    # The published schedule stands in for a parameter file, never for one that was given.
    if args.command == 'seasonal' and args.params_file is None and not ({'m', *COSINE_KEYS} & set(overrides)):
        overrides = {**SEASONAL_SCHEDULE, **overrides}
    cfg = RunConfig(command=args.command, params_file=args.params_file, overrides=overrides, dt=_default_dt(args.dt),
                    seed=args.seed, output=args.output, name=args.name)
    for key in ('integrator', 'horizon', 'sample_stride', 'n_runs', 'x0', 'y0', 'hybrid_threshold', 'width'):
        if values.get(key) is not None:
            setattr(cfg, key, values[key])
    if values.get('omegas') is not None:
        cfg.omegas = tuple(values['omegas'])
    if values.get('checkpoints') is not None:
        cfg.checkpoints = tuple(values['checkpoints'])
    if values.get('y_values') is not None:
        cfg.y_values = tuple(values['y_values'])
    if args.command == 'canard':
        cfg.bracket = (args.lower, args.upper)
    cfg.validate()
    return cfg


def main(argv: list | None = None) -> int:
    """
    Parses argv, selects the settings and runs the command.

    Returns
    -------
    The exit code; with context.exit_on_error set failures exit the process directly.
    """
    try:
        args = build_parser().parse_args(argv)
        if args.settings:
            context.set_settings_module(args.settings)
        context.set_no_logging(args.quiet)
        cfg = config_from_args(args)
    except ValidationError as e:
        logger.error(e, exit_code=1)
        return 1
    context.clear_data_references()
    context.set_run_config(cfg.to_record(), cfg.seed)
    return COMMANDS[cfg.command](cfg)


if __name__ == '__main__':
    sys.exit(main())
