import hashlib
import json
import math
import os

import numpy as np
import pandas as pd

from attofox.model import ModelParams, read_params

"""
The input, output and asset analysis handlers the data decorators call through the settings module.

Trajectories and tables are written as CSV framed by a leading and a trailing '# {json}' line,
summary records as JSON lines whose first record describes the run.
"""


def _clean(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    return value


def to_json(record) -> str:
    """
    Serialises a record on one line; NaN becomes null and numpy scalars plain numbers.
    """
    return json.dumps(_clean(record), default=str)


def asset_path(path: str, file: str, extension: str) -> str:
    if not file.endswith(f'.{extension}'):
        file = f'{file}.{extension}'
    return os.path.join(path, file)


def input_handler(path: str, file: str) -> ModelParams:
    """
    Loads a key = value parameter file.

    Parameters
    ----------
    path: str
      The directory.
    file: str
      The file name.

    Returns
    -------
    The ModelParams it describes.
    """
    return read_params(os.path.join(path, file))


def output_handler(path: str, file: str, extension: str, data, header: dict | None = None,
                   footer: dict | None = None, na_rep: str = '') -> None:
    """
    Writes a DataFrame as csv or a list of records as jsonl.

    Parameters
    ----------
    path: str
      The output directory, created if needed.
    file: str
      The asset name.
    extension: str
      csv or jsonl.
    data
      A DataFrame for csv; a list of dicts or a DataFrame for jsonl.
    header: dict | None
      Written first: as a '# ' comment line in csv, as the first record in jsonl.
    footer: dict | None
      Written last as a '# ' comment line in csv.
    na_rep: str
      The csv spelling of missing values.
    """
    os.makedirs(path, exist_ok=True)
    target = asset_path(path, file, extension)
    if extension == 'csv':
        if not isinstance(data, pd.DataFrame):
            raise TypeError(f'csv output needs a DataFrame, received {type(data).__name__}.')
        with open(target, 'w', newline='') as handle:
            if header is not None:
                handle.write(f'# {to_json(header)}\n')
            data.to_csv(handle, index=False, na_rep=na_rep, lineterminator='\n')
            if footer is not None:
                handle.write(f'# {to_json(footer)}\n')
    elif extension == 'jsonl':
        records = data.to_dict(orient='records') if isinstance(data, pd.DataFrame) else list(data)
        with open(target, 'w') as handle:
            if header is not None:
                handle.write(to_json(header) + '\n')
            for record in records:
                handle.write(to_json(record) + '\n')
    else:
        raise ValueError(f'Unknown output format {extension}.')


def analyze_asset_handler(path: str, file: str, extension: str | None, data, duration: str, operation: str) -> str:
    """
    Adds a short SHA-1 checksum to the log line of every asset, so byte identical reruns are visible.

    Parameters
    ----------
    path: str
      The directory.
    file: str
      The asset name.
    extension: str | None
      The format, None for inputs.
    data
      The loaded or written data.
    duration: str
      How long the handler took.
    operation: str
      input or output.

    Returns
    -------
    output: str
      The log line.
    """
    if operation == 'input':
        payload = to_json(data.to_mapping() if isinstance(data, ModelParams) else repr(data)).encode('utf-8')
        checksum = hashlib.sha1(payload).hexdigest()[0:10]
        source = os.path.join(path, file) if file else 'defaults'
        return f'Loaded asset {source} {duration} {checksum}'
    target = asset_path(path, file, extension)
    with open(target, 'rb') as handle:
        checksum = hashlib.sha1(handle.read()).hexdigest()[0:10]
    return f'Finished output: {target} {duration} {checksum}'
