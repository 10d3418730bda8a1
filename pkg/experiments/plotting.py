"""
Plot-script emission for dimscan results.

The script embeds its data and draws estimate_lower (and estimate_upper where
present) against d with plotly, one series per (setting, K or N, p). Identical
CSV input gives byte-identical script output.
"""
import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from experiments.runner import read_results

logger = logging.getLogger(__name__)

SCRIPT_TEMPLATE = '''"""Riesz transform norms against dimension. Generated from {source}."""
import plotly.graph_objects as go

DATA = {data}


def build_figure():
    fig = go.Figure()
    for series in DATA["series"]:
        fig.add_trace(go.Scatter(
            x=series["d"],
            y=series["lower"],
            mode="lines+markers",
            name=series["label"] + " lower",
        ))
        if any(value is not None for value in series["upper"]):
            fig.add_trace(go.Scatter(
                x=series["d"],
                y=series["upper"],
                mode="lines",
                line=dict(dash="dash"),
                name=series["label"] + " upper",
            ))
    fig.update_layout(
        template="plotly_dark",
        xaxis_title="d",
        yaxis_title="||R_r||_(p->p)",
        legend_title="series",
    )
    return fig


if __name__ == "__main__":
    build_figure().write_html("{html}")
'''


def _maybe(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def _series(df) -> List[Dict]:
    """Group dimscan rows by (setting, size, p); the largest bound over r per d"""
    points: Dict[Tuple[str, str, float], Dict[int, List[Optional[float]]]] = defaultdict(dict)
    for _, record in df.iterrows():
        if record["experiment"] != "dimscan" or record["estimate_lower"] == "":
            continue
        size = f"K={record['K']}" if record["setting"] == "cyclic" else f"N={record['N']}"
        key = (record["setting"], size, float(record["p"]))
        d = int(record["d"])
        lower, upper = float(record["estimate_lower"]), _maybe(record["estimate_upper"])
        previous = points[key].get(d)
        if previous is not None:
            lower = max(lower, previous[0])
            upper = None if upper is None or previous[1] is None else max(upper, previous[1])
        points[key][d] = [lower, upper]

    out = []
    for (setting, size, p) in sorted(points):
        by_d = points[(setting, size, p)]
        ds = sorted(by_d)
        out.append({
            "label": f"{setting} {size} p={_p_label(p)}",
            "d": ds,
            "lower": [by_d[d][0] for d in ds],
            "upper": [by_d[d][1] for d in ds],
        })
    return out


def _p_label(p: float) -> str:
    return "inf" if math.isinf(p) else f"{p:g}"


def emit_plot(csv_path: Union[str, Path], script_path: Optional[Union[str, Path]] = None) -> Path:
    """
    Write a self-contained plotly script for a result CSV

    Raises:
        SchemaError: the CSV does not carry the result columns
    """
    csv_path = Path(csv_path)
    df = read_results(csv_path)
    script_path = Path(script_path) if script_path else csv_path.with_suffix(".plot.py")

    data = {"series": _series(df)}
    text = SCRIPT_TEMPLATE.format(
        source=csv_path.name,
        data=json.dumps(data, indent=4, sort_keys=True).replace("null", "None"),
        html=csv_path.with_suffix(".html").name,
    )
    script_path.write_text(text, encoding="utf-8")
    logger.info(f"Plot script with {len(data['series'])} series written to {script_path}")
    return script_path
