import math

import pytest

from utils.formatters import (
    format_bracket,
    format_cell,
    format_exponent,
    format_float,
    format_runtime,
    get_color_for_status,
)


@pytest.mark.parametrize("value,expected", [
    (None, ""),
    (math.nan, ""),
    (math.inf, "inf"),
    (-math.inf, "-inf"),
    (1.0, "1"),
    (0.1, "0.10000000000000001"),
])
def test_format_float(value, expected):
    assert format_float(value) == expected


def test_float_text_round_trips():
    value = math.sqrt(2.0)
    assert float(format_float(value)) == value


def test_format_exponent():
    assert format_exponent(math.inf) == "inf"
    assert format_exponent(4.0) == "4"
    assert format_exponent(None) == ""


@pytest.mark.parametrize("value,expected", [(True, "true"), (False, "false"), (3, "3"), ("boyd", "boyd"), (None, "")])
def test_format_cell(value, expected):
    assert format_cell(value) == expected


def test_format_bracket():
    assert format_bracket(1.0, 2.0) == "[1.000000, 2.000000]"
    assert format_bracket(1.0, None, "boyd") == "[1.000000, ?) (boyd)"
    assert format_bracket(None) == "N/A"


@pytest.mark.parametrize("ms,expected", [(None, "N/A"), (12.4, "12ms"), (2500, "2.50s"), (90_000, "1.5min")])
def test_format_runtime(ms, expected):
    assert format_runtime(ms) == expected


@pytest.mark.parametrize("status,color", [("ok", "green"), ("not-converged", "yellow"), ("fail: drift", "red"), (None, "white")])
def test_status_colors(status, color):
    assert get_color_for_status(status) == color
