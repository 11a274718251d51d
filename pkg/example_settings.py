import os

from attofox.handlers import analyze_asset_handler, input_handler, output_handler  # noqa: F401

"""
Sample settings module. Copy it, adjust it and select it with --settings or context.set_settings_module.
"""

# A smattering of directories that are meaningful.
project_path = '.'
data_dir = project_path + '/data'
params_dir = data_dir + '/params'
output_dir = data_dir + '/output'

# The joblib worker count for extinction ensembles and the process comparison.
# Results do not depend on it, every run draws from its own seeded stream.
workers = int(os.environ.get('ATTOFOX_WORKERS', os.cpu_count() or 1))

# The most events a single jump simulation may take; beyond it use the diffusion or hybrid integrator.
jump_event_budget = 10 ** 9

# The Euler step used when a command is not given --dt.
default_dt = 1e-4

# Log chart minima below this xi are reported with below_floor set instead of being followed further.
xi_floor = -3.0

# Limit cycles whose smallest x is below this are classified as large.
cycle_size_threshold = 1e-6

# The canard search splits large from small cycles at this smallest x; cycles just below the explosion
# dip far under cycle_size_threshold without being relaxation cycles yet.
canard_threshold = 1e-3

# The input_handler, output_handler and analyze_asset_handler imported above work with the input_data and
# output_data decorators. Replace them here to read or write other formats.
