import hashlib
import json
import math
import os

import numpy as np
import pandas as pd
import pytest

from attofox.context import context
from attofox.handlers import analyze_asset_handler, input_handler, output_handler, to_json
from attofox.model import ModelParams

"""
Tests the input, output and asset analysis handlers.
"""

context.set_settings_module('attofox.test_settings')

settings = context.get_settings()


def test_to_json() -> None:
    """
    Tests that NaN and numpy scalars serialise as plain JSON.
    """
    record = {'a': math.nan, 'b': np.float64(0.5), 'c': np.int64(3), 'd': np.bool_(True), 'e': (1.0, math.nan)}
    assert json.loads(to_json(record)) == {'a': None, 'b': 0.5, 'c': 3, 'd': True, 'e': [1.0, None]}


def test_input_handler() -> None:
    """
    Tests loading a parameter fixture.
    """
    assert input_handler(settings.data_dir, 'default.cfg') == ModelParams()


def test_csv_output(tmp_path) -> None:
    """
    Tests the csv layout: a header comment, the table, a footer comment.
    """
    frame = pd.DataFrame({'t': [0.0, 0.5], 'x': [2.0, 0.0], 'xi': [0.1, math.nan]})
    output_handler(str(tmp_path / 'nested'), 'run', 'csv', frame, header={'seed': 1}, footer={'termination': 'done'})
    lines = (tmp_path / 'nested' / 'run.csv').read_text().splitlines()
    assert lines[0] == '# {"seed": 1}'
    assert lines[1] == 't,x,xi'
    assert lines[2] == '0.0,2.0,0.1'
    assert lines[3] == '0.5,0.0,'
    assert lines[4] == '# {"termination": "done"}'
    output_handler(str(tmp_path), 'missing', 'csv', frame, na_rep='NA')
    assert (tmp_path / 'missing.csv').read_text().splitlines()[-1] == '0.5,0.0,NA'


def test_jsonl_output(tmp_path) -> None:
    """
    Tests that the header is the first JSON lines record.
    """
    output_handler(str(tmp_path), 'summary', 'jsonl', [{'m': 0.6, 'min_x': math.nan}], header={'command': 'canard'})
    records = [json.loads(line) for line in (tmp_path / 'summary.jsonl').read_text().splitlines()]
    assert records == [{'command': 'canard'}, {'m': 0.6, 'min_x': None}]


def test_bad_outputs(tmp_path) -> None:
    """
    Tests the rejected output requests.
    """
    with pytest.raises(TypeError):
        output_handler(str(tmp_path), 'records', 'csv', [{'a': 1}])
    with pytest.raises(ValueError):
        output_handler(str(tmp_path), 'records', 'sql', [{'a': 1}])


def test_analyze_asset_handler(tmp_path) -> None:
    """
    Tests the checksums of written and loaded assets.
    """
    output_handler(str(tmp_path), 'summary', 'jsonl', [{'a': 1}])
    checksum = hashlib.sha1((tmp_path / 'summary.jsonl').read_bytes()).hexdigest()[0:10]
    message = analyze_asset_handler(str(tmp_path), 'summary', 'jsonl', None, '0.01s', 'output')
    assert message == f'Finished output: {os.path.join(str(tmp_path), "summary.jsonl")} 0.01s {checksum}'
    loaded = analyze_asset_handler(settings.data_dir, 'default.cfg', None, ModelParams(), '0.00s', 'input')
    assert loaded.startswith('Loaded asset ')
    assert loaded == analyze_asset_handler(settings.data_dir, 'default.cfg', None, ModelParams(), '0.00s', 'input')
    assert analyze_asset_handler('.', None, None, ModelParams(), '0.00s', 'input').startswith('Loaded asset defaults')
