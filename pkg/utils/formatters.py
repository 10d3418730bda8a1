import math
from typing import Optional, Union

Number = Union[int, float, None]


def format_float(value: Number, digits: int = 17) -> str:
    """Round-trippable float text for the result CSV; empty for missing values"""
    if value is None:
        return ""
    try:
        value = float(value)
    except (TypeError, ValueError):
        return ""
    if math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def format_exponent(p: Number) -> str:
    if p is None:
        return ""
    return "inf" if math.isinf(p) else format_float(p)


def format_cell(value) -> str:
    """CSV text for one ResultRow field"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def format_bracket(lower: Number, upper: Number = None, method: Optional[str] = None, decimals: int = 6) -> str:
    """[lower, upper] for reports; an open bracket when only the lower bound is known"""
    if lower is None:
        return "N/A"
    text = f"[{lower:.{decimals}f}, {upper:.{decimals}f}]" if upper is not None else f"[{lower:.{decimals}f}, ?)"
    return f"{text} ({method})" if method else text


def format_runtime(ms: Number) -> str:
    if ms is None:
        return "N/A"
    if ms >= 60_000:
        return f"{ms / 60_000:.1f}min"
    if ms >= 1_000:
        return f"{ms / 1_000:.2f}s"
    return f"{ms:.0f}ms"


def get_color_for_status(status: Optional[str]) -> str:
    """rich style for a row or check status"""
    if status is None:
        return "white"
    if status == "ok":
        return "green"
    if status == "not-converged":
        return "yellow"
    return "red"
