import math

import pytest

from experiments.plotting import emit_plot
from experiments.rows import ResultRow
from experiments.runner import run, write_results
from operators.exceptions import SchemaError
from utils.config import ExperimentConfig


def test_empty_results(tmp_path):
    csv = write_results([], tmp_path / "empty.csv")
    script = emit_plot(csv)
    assert script == tmp_path / "empty.plot.py"
    text = script.read_text()
    assert '"series": []' in text
    compile(text, str(script), "exec")


def test_single_point(tmp_path):
    row = ResultRow("dimscan", "cyclic", K=4, d=2, p=2.0, r=1, estimate_lower=1.4, estimate_upper=1.5)
    csv = write_results([row], tmp_path / "one.csv")
    text = emit_plot(csv).read_text()
    assert "cyclic K=4 p=2" in text
    assert text.count("\"label\": ") == 1


def test_largest_axis_wins(tmp_path):
    rows = [
        ResultRow("dimscan", "cyclic", K=4, d=2, p=3.0, r=1, estimate_lower=1.2),
        ResultRow("dimscan", "cyclic", K=4, d=2, p=3.0, r=2, estimate_lower=1.3),
        ResultRow("contraction", "cyclic", K=4, d=2, p=3.0, estimate_lower=0.9),
    ]
    text = emit_plot(write_results(rows, tmp_path / "axes.csv")).read_text()
    assert "1.3" in text
    assert "1.2" not in text
    assert "0.9" not in text


def test_deterministic(tmp_path):
    csv = run(ExperimentConfig(K=[3], d=[1, 2], p=[2.0, math.inf], out=str(tmp_path / "scan.csv")).validate()).csv_path
    first = emit_plot(csv, tmp_path / "first.py").read_bytes()
    second = emit_plot(csv, tmp_path / "second.py").read_bytes()
    assert first == second
    compile(first.decode(), "first.py", "exec")


def test_schema_error(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError):
        emit_plot(path)
