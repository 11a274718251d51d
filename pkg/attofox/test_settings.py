import os

from attofox.handlers import analyze_asset_handler, input_handler, output_handler  # noqa: F401

"""
A settings file for running the test suite.
"""

data_dir = os.path.join(os.path.dirname(__file__), 'tests', 'fixture')
output_dir = os.path.join(os.path.dirname(__file__), 'tests', 'output')

workers = 1
jump_event_budget = 10 ** 8
default_dt = 1e-4
xi_floor = -3.0
cycle_size_threshold = 1e-6
canard_threshold = 1e-3
