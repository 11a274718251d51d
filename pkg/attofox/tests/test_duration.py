from attofox.decorators import _get_formatted_duration

"""
Test the duration formatting function.
"""


def test_formatting_some_durations() -> None:
    """
    Tests the duration formatter on both sides of a minute.
    """
    assert _get_formatted_duration(30) == '30.00s'
    assert _get_formatted_duration(0.004) == '0.00s'
    assert _get_formatted_duration(1.257) == '1.26s'
    assert _get_formatted_duration(550) == '9m10s'
    assert _get_formatted_duration(4000) == '1h6m40s'
    assert _get_formatted_duration(3600) == '1h'
