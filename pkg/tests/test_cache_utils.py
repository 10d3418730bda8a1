import numpy as np
import pytest

from operators.cache_utils import cache_data, clear_cache, get_cache_info

calls = []


@cache_data
def _squares(n: int) -> np.ndarray:
    calls.append(n)
    return np.arange(n) ** 2


@cache_data
def _doubled(values: np.ndarray) -> np.ndarray:
    calls.append(values.size)
    return 2 * values


@pytest.fixture(autouse=True)
def reset_calls():
    calls.clear()


def test_memoises():
    first = _squares(5)
    second = _squares(5)
    assert first is second
    assert calls == [5]
    assert get_cache_info()["total_items"] == 1


def test_results_are_read_only():
    with pytest.raises(ValueError):
        _squares(4)[0] = 7


def test_array_arguments_keyed_by_content():
    _doubled(np.ones(3))
    _doubled(np.ones(3))
    _doubled(np.zeros(3))
    assert calls == [3, 3]


def test_clear_cache():
    _squares(3)
    clear_cache()
    _squares(3)
    assert calls == [3, 3]
    assert get_cache_info()["max_items"] == 256
