import os

from attofox.handlers import analyze_asset_handler, input_handler, output_handler  # noqa: F401

"""
The settings used when no other module is selected with --settings.
"""

output_dir = os.environ.get('ATTOFOX_OUTPUT_DIR', './output')

# joblib workers for ensembles.
workers = int(os.environ.get('ATTOFOX_WORKERS', '1'))

jump_event_budget = 10 ** 9
default_dt = 1e-4
xi_floor = -3.0
cycle_size_threshold = 1e-6
canard_threshold = 1e-3
