import re
import sys
import traceback

from rich.console import Console

from attofox.context import context

"""
Some very simple rich enabled CLI output helpers.
"""

# A logger instance for use here and elsewhere.
console = Console()


def info(message, **kwargs) -> None:
    """
    Logs an informational message.

    Parameters
    ----------
    message: str
      The output.
    kwargs: dict
      Any kwargs to pass to the console.
    """
    if not context.no_logging:
        console.print(message, style='blue', **kwargs)


def success(message, **kwargs) -> None:
    if not context.no_logging:
        console.print(message, style='green', **kwargs)


def warning(message, **kwargs) -> None:
    """
    Logs a warning message, used for numeric diagnostics that do not stop a run.

    Parameters
    ----------
    message: str
      The output.
    kwargs: dict
      Any kwargs to pass to the console.
    """
    if not context.no_logging:
        console.print(message, style='yellow', **kwargs)


def get_last_frame(traceback_text: str) -> tuple:
    """
    Finds the innermost 'File ...' line of a formatted traceback and the source line after it.
    """
    matches = re.findall(r'(File .*?)\n(.*?)(?=\nFile|$)', traceback_text, re.MULTILINE | re.DOTALL)
    if not matches:
        return None, None
    file_line, code_line = matches[-1]
    return file_line.strip(), code_line.strip().splitlines()[0] if code_line.strip() else ''


def error(message, exit_code: int = 1, **kwargs) -> None:
    """
    Logs an error message and, when context.exit_on_error is set, exits with exit_code.

    Parameters
    ----------
    message: str
      The output.
    exit_code: int
      The process exit status.
    kwargs: dict
      Any kwargs to pass to the console.
    """
    if not context.no_logging:
        file_line, code_line = get_last_frame(traceback.format_exc(limit=4))
        console.print('------------', style='red')
        if file_line:
            console.print(file_line, style='red', markup=False)
            console.print(f'Failing code: {code_line}', style='red', markup=False)
        console.print(f'Error occurred: {message}', style='red', markup=False, **kwargs)
        console.print(context.summarize_data_references(), style='red', markup=False)
        console.print('------------', style='red')
    if context.exit_on_error:
        sys.exit(exit_code)
