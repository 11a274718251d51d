import os
import sys
import time
from datetime import datetime
from functools import wraps

from attofox import logger
from attofox.context import context
from attofox.exceptions import ContractError, ValidationError
from attofox.logger import error

"""
Provides decorators that give every command a narrative structure: flow, task, input_data and output_data.
"""


def exit_code_for(exception: BaseException) -> int:
    """
    The process exit status of an exception: 1 for bad input, 3 for I/O and 2 for everything else.
    """
    if isinstance(exception, (ValidationError, ContractError)):
        return 1
    if isinstance(exception, OSError):
        return 3
    return 2


def flow(*args, **kwargs):
    """
    Logs command run messages, sets context.flow_id and turns exceptions into exit codes.

    Notes
    -----
    This method uses *args and **kwargs, so the decorator may be called and receive kwargs of its own.
    Examples:

    Decorator not called.

    ```
    @flow
    some_flow():
      pass
    ```

    Decorator called.

    ```
    @flow(flow_id='table1')
    some_flow():
      pass
    ```

    Keyword Arguments
    -----------------
    flow_id: str
        A flow name override, the module's file name otherwise.

    Returns
    -------
    A callable which is the original function with decoration. It returns the exit code of the run;
    with context.exit_on_error set a failing run exits the process instead.
    """

    def _flow(original_function):
        name = kwargs.get('flow_id', _get_file_name_from_function(original_function))

        # Make sure the original function's docstring is available through help.
        @wraps(original_function)
        def wrapper_function(*args, **kwargs):
            context.set_flow_id(name)
            logger.info(f'Beginning flow: [bold]{name}[/bold]')
            logger.info(f'Started: {datetime.now():%Y-%m-%d %H:%M:%S}')
            if context.master_seed is not None:
                logger.info(f'Master seed: {context.master_seed}')
            try:
                duration = _time_function(original_function, *args, **kwargs)[0]
            except Exception as e:
                exit_code = exit_code_for(e)
                error(e, exit_code=exit_code)
                return exit_code
            logger.success('Completed flow run!')
            logger.info(f'Total duration {duration}')
            return 0

        return wrapper_function

    # If no arguments are passed to the decorator, return the wrapper one level down.
    if len(args) > 0 and callable(args[0]):
        return _flow(args[0])
    return _flow


def task(*args, **kwargs):
    """
    Logs task run messages and sets the context.current_task.

    Notes
    -----
    Task implements an optional kwarg task_description. This kwarg overrides the default task name.
    It is meant for use cases where a task is called repeatedly, once per omega for instance.
    Exceptions are logged and raised again for the flow to handle.

    Keyword Arguments
    -----------------
    task_description: str
       Optionally override the name of the task output to the terminal.

    Returns
    -------
    A callable which is the original function with decoration.
    """

    def _task(original_function):
        @wraps(original_function)
        def wrapper_function(*args, **kwargs):
            task_description = kwargs.pop('task_description', original_function.__name__)
            logger.info(f'Beginning task: {task_description}')
            context.set_current_task(original_function.__name__)
            try:
                duration, output = _time_function(original_function, *args, **kwargs)
            except Exception:
                logger.warning(f'Failed task: {task_description}')
                raise
            logger.success(f'Completed task: {task_description} {duration}')
            return output

        return wrapper_function

    if len(args) > 0 and callable(args[0]):
        return _task(args[0])
    return _task


def input_data(*args, **kwargs):
    """
    Loads a dictionary of assets into the context object for the run.

    The decorated function returns {directory: {reference_name: file}}, where file may instead be a dict
    with the keys file, optional, filters and default.
    Filters map a callable to a value and are applied as data = callable(data, value), in order.

    Keyword Arguments
    -----------------
    analyze: bool
       Whether to pass loaded assets to settings.analyze_asset_handler.
    optional: bool
       The default for assets that do not say.

    Returns
    -------
    A callable which is the original function with decoration.
    """
    analyze = kwargs.get('analyze', True)
    optional_default = kwargs.get('optional', False)

    def _input(original_function):
        @wraps(original_function)
        def wrapper_function(*args, **kwargs):
            settings = context.get_settings()
            sources = original_function(*args, **kwargs)
            # Assets are listed in two tiers.
            for group, assets in sources.items():
                for key, name in assets.items():
                    optional = optional_default
                    filters = None
                    default = None
                    if isinstance(name, dict):
                        optional = name.get('optional', optional_default)
                        filters = name.get('filters')
                        default = name.get('default')
                        name = name.get('file')
                    logger.info(f'Handling asset: {name}')
                    if name is None or not os.path.exists(os.path.join(group, name)):
                        if not optional:
                            raise FileNotFoundError(f'Non-optional file missing: {os.path.join(group, str(name))}')
                        if default is None:
                            raise ValidationError(f'Optional file missing and no default provided: {name}')
                        logger.info(f'Optional file missing: {name}, using the default.')
                        data = default
                        duration = _get_formatted_duration(0.0)
                    else:
                        duration, data = _time_function(settings.input_handler, group, name)
                    for filter_function, value in (filters or {}).items():
                        data = filter_function(data, value)
                    context.set_data_reference(key, data)
                    message = ''
                    # Allow an analyze_asset_handler to ensure integrity and/or write the logging.
                    if analyze and hasattr(settings, 'analyze_asset_handler'):
                        message = settings.analyze_asset_handler(group, name, None, data, duration, 'input')
                    logger.success(message or f'Loaded asset: {name} {duration}')

        return wrapper_function

    if len(args) > 0 and callable(args[0]):
        return _input(args[0])
    return _input


def output_data(*args, **kwargs):
    """
    Outputs a dictionary of assets from the context object in a variety of formats.

    The decorated function returns {directory: {file: {'formats': (...), 'data': reference, 'output_kwargs': {}}}};
    data defaults to the file key and output_kwargs to nothing.

    Keyword Arguments
    -----------------
    analyze: bool
       Whether to pass written assets to settings.analyze_asset_handler.

    Returns
    -------
    A callable which is the original function with decoration.
    """
    analyze = kwargs.get('analyze', True)

    def _output(original_function):
        @wraps(original_function)
        def wrapper_function(*args, **kwargs):
            settings = context.get_settings()
            output_map = original_function(*args, **kwargs)
            for group, assets in output_map.items():
                for key, asset in assets.items():
                    data = context.get_data_reference(asset.get('data', key))
                    for asset_format in asset['formats']:
                        logger.info(f'Beginning output: {key} in format {asset_format}')
                        duration = _time_function(settings.output_handler, group, key, asset_format, data,
                                                  **asset.get('output_kwargs', {}))[0]
                        message = ''
                        if analyze and hasattr(settings, 'analyze_asset_handler'):
                            message = settings.analyze_asset_handler(group, key, asset_format, data, duration,
                                                                     'output')
                        logger.success(message or f'Finished output: {key} in format {asset_format} {duration}')

        return wrapper_function

    if len(args) > 0 and callable(args[0]):
        return _output(args[0])
    return _output


def _get_file_name_from_function(function: callable) -> str:
    """
    Gets the parent module's file name, minus extension for a given function.

    Parameters
    ----------
    function: callable
        The function to get the module filename from.

    Returns
    -------
    The name of the function's parent module, minus file extension
    """
    flow_file = sys.modules[function.__module__].__file__
    return os.path.splitext(os.path.basename(flow_file))[0]


def _time_function(func: callable, *args, **kwargs) -> tuple:
    """
    Times the execution of a function.

    Returns
    -------
    A tuple the first element of which is a formatted string of duration.
      The second element is the return value of the provided function.
    """
    start = time.perf_counter()
    output = func(*args, **kwargs)
    return _get_formatted_duration(time.perf_counter() - start), output


def _get_formatted_duration(seconds: float) -> str:
    """
    Formats a duration: hundredths of a second below a minute, whole hours, minutes and seconds above.

    Parameters
    ----------
    seconds: float
      The elapsed time.

    Returns
    -------
    duration: str
      The formatted duration.
    """
    if seconds < 60:
        return f'{seconds:.2f}s'
    hours = int(seconds // 3600)
    minutes = int((seconds - hours * 3600) // 60)
    seconds = int(round(seconds - hours * 3600 - minutes * 60))
    output = ''
    if hours > 0:
        output += f'{hours}h'
    if minutes > 0:
        output += f'{minutes}m'
    if seconds > 0:
        output += f'{seconds}s'
    return output
