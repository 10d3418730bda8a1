import math
from typing import Sequence, Union

from operators.exceptions import DomainError, MemoryBudgetError

Number = Union[int, float]

DEFAULT_MEM_CAP = 2 ** 24


def require_positive(name: str, value: Number) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def require_non_negative(name: str, value: Number) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise DomainError(f"{name} must be a non-negative finite number, got {value!r}")
    return float(value)


def require_int_at_least(name: str, value: int, lower: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < lower:
        raise DomainError(f"{name} must be an integer >= {lower}, got {value!r}")
    return value


def require_axis(r: int, d: int) -> int:
    """Axes are numbered 1..d as in the tensor notation T ⊗ I_(r)"""
    if isinstance(r, bool) or not isinstance(r, int) or not 1 <= r <= d:
        raise DomainError(f"axis r must be in 1..{d}, got {r!r}")
    return r


def require_exponent(p: Number, allow_one: bool = True, allow_inf: bool = True) -> float:
    """Validate an l^p exponent in [1, inf] (optionally open at either end)"""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise DomainError(f"exponent p must be a number, got {p!r}")
    if math.isnan(p) or p < 1:
        raise DomainError(f"exponent p must be >= 1, got {p}")
    if p == 1 and not allow_one:
        raise DomainError("exponent p = 1 is not admitted here")
    if math.isinf(p) and not allow_inf:
        raise DomainError("exponent p = inf is not admitted here")
    return p


def conjugate_exponent(p: float) -> float:
    """Hoelder conjugate p' with 1/p + 1/p' = 1"""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def check_budget(points: int, mem_cap: int = DEFAULT_MEM_CAP, what: str = "grid") -> int:
    """Reject a point count above the cap before anything is allocated"""
    if points > mem_cap:
        raise MemoryBudgetError(f"{what} of {points} points exceeds the memory cap of {mem_cap}")
    return points


def grid_points(base: int, d: int) -> int:
    # exact integer power, so huge grids are rejected without overflow
    return int(base) ** int(d)


def is_monotone_decreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))
