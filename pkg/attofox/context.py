import importlib
import json
import re
import types

import numpy as np
import pandas as pd

"""
Provides a context pseudo-singleton to store information about the current command run.
"""

SEED_DERIVATION = 'run i of an ensemble seeds PCG64 with seed ^ splitmix64(i); compare uses i + n_runs for diffusion'


class Context(object):
    """
    A class for storing information about the current command run.

    This should not be used/instantiated directly in code. See context below.
    """

    # Named results of the run, read by output_data.
    data_references = {}
    # The active command id.
    flow_id = None
    # The current task of the command.
    current_task = None
    # Disable logging/output.
    no_logging = False
    # Exit the process with the mapped exit code on error.
    exit_on_error = True
    # The resolved configuration of the run, written into every output header.
    run_config = {}
    # The master seed of the run.
    master_seed = None
    # The namespace to find settings.
    settings_module = 'attofox.default_settings'

    def set_flow_id(self, flow_id: str) -> None:
        """
        Setter for the flow id.

        Parameters
        ----------
        flow_id: str
            The name of the command that is being executed.
        """
        self.flow_id = flow_id

    def set_current_task(self, current_task: str) -> None:
        self.current_task = current_task

    def set_no_logging(self, no_logging: bool) -> None:
        """
        Setter for the logging status.

        Parameters
        ----------
        no_logging: bool
            Whether attofox.logger should produce output.
        """
        self.no_logging = no_logging

    def set_exit_on_error(self, exit_on_error: bool) -> None:
        """
        Setter for the exit behavior.

        Parameters
        ----------
        exit_on_error: bool
            Whether an error should terminate the process with its exit code.
        """
        self.exit_on_error = exit_on_error

    def set_run_config(self, run_config: dict, master_seed: int | None = None) -> None:
        """
        Records the resolved configuration and seed of the run.

        Parameters
        ----------
        run_config: dict
            JSON serialisable settings of the run.
        master_seed: int | None
            The seed every random stream of the run derives from.
        """
        self.run_config = dict(run_config)
        self.master_seed = master_seed

    def describe_run(self) -> dict:
        """
        The header record of every output: command, configuration, seed and how each run's stream derives from it.
        """
        return {'command': self.flow_id, 'config': self.run_config, 'seed': self.master_seed,
                'seed_derivation': SEED_DERIVATION}

    def set_data_reference(self, name: str, data_source) -> None:
        """
        Sets an item in the context's list of data references.

        Parameters
        ----------
        name: str
            The name by which to access the data reference.
        data_source
            The data source of mixed type.
        """
        self.data_references[name] = data_source

    def get_data_reference(self, name: str | list):
        """
        Gets a data reference or throws if one is not found.

        Parameters
        ----------
        name: str | list
            A name or list of names (or regexes) of data references to get.
        """
        if type(name) is str:
            if name in self.data_references.keys():
                return self.data_references[name]
            # If we don't find a direct match, see if it's a regex.
            pattern = re.compile(name)
            matches = {key: value for key, value in self.data_references.items() if pattern.match(key)}
            if not matches:
                raise KeyError(f'No data references were named or matched, {name}. Was it set by a task?')
            return matches
        if type(name) is list:
            matches = {}
            for reference_name in name:
                data = self.get_data_reference(reference_name)
                if type(data) is dict and reference_name not in self.data_references:
                    matches = {**matches, **data}
                else:
                    matches[reference_name] = data
            return matches
        bad_type = type(name)
        raise TypeError(f'Data references may only be gotten by string or list, {bad_type} provided.')

    def summarize_data_references(self) -> str:
        """
        One line per data reference, shapes for tables and arrays, for error reports.
        """
        lines = [f'run: {json.dumps(self.describe_run(), default=str)}']
        for key, value in self.data_references.items():
            if isinstance(value, pd.DataFrame):
                lines.append(f'{key}: DataFrame {value.shape} {list(value.columns)}')
            elif isinstance(value, np.ndarray):
                lines.append(f'{key}: ndarray {value.shape}')
            else:
                lines.append(f'{key}: {type(value).__name__}')
        return '\n'.join(lines)

    def clear_data_references(self) -> None:
        """
        Empties the data_references storage.
        """
        self.data_references = {}

    def set_settings_module(self, module_name: str) -> None:
        """
        Sets the settings namespace.

        Parameters
        ----------
        module_name: str
          The module name.
        """
        self.settings_module = module_name

    def get_settings(self) -> types.ModuleType:
        """
        Get the settings module and provide a helpful message, if not found.

        Returns
        -------
        The active settings module.
        """
        try:
            settings = importlib.import_module(self.settings_module)
        except ModuleNotFoundError:
            message = f'Missing settings module {self.settings_module}. Check out example_settings.py for an example.'
            raise ModuleNotFoundError(message)
        return settings


# The instance of Context that should be manipulated by the system.
context = Context()
