import hashlib
import logging
import threading
from functools import wraps
from typing import Any, Callable

import numpy as np
from cachetools import LRUCache

logger = logging.getLogger(__name__)

_cache = LRUCache(maxsize=256)
_lock = threading.Lock()


def _key_part(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return f"nd{value.shape}{value.dtype}:{hashlib.md5(value.tobytes()).hexdigest()}"
    return repr(value)


def cache_data(func: Callable) -> Callable:
    """
    Decorator memoising functions that return numpy arrays (or tuples of them)

    The key is an md5 of the function name and the arguments; arrays among the
    arguments are keyed by shape, dtype and content. Entries never expire.
    Arrays are frozen before they are handed out so callers cannot corrupt a
    shared entry.
    """
    @wraps(func)
    def wrapper(*args, **kwargs):
        key_data = "_".join(
            [func.__module__, func.__qualname__]
            + [_key_part(a) for a in args]
            + [f"{k}={_key_part(v)}" for k, v in sorted(kwargs.items())]
        )
        cache_key = hashlib.md5(key_data.encode()).hexdigest()

        with _lock:
            if cache_key in _cache:
                return _cache[cache_key]

        result = func(*args, **kwargs)
        _freeze(result)

        with _lock:
            _cache[cache_key] = result
        return result

    return wrapper


def _freeze(value: Any) -> None:
    if isinstance(value, np.ndarray):
        value.setflags(write=False)
    elif isinstance(value, tuple):
        for item in value:
            _freeze(item)


def clear_cache() -> None:
    """Drop every memoised entry"""
    with _lock:
        _cache.clear()


def get_cache_info() -> dict:
    """
    Get information about current cache state

    Returns:
        Dictionary with cache statistics
    """
    with _lock:
        return {
            'total_items': len(_cache),
            'max_items': _cache.maxsize,
        }
