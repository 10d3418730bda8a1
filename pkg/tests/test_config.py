import math

import pytest

from operators.exceptions import ConfigValidationError
from operators.pnorm import DEFAULT_SEED
from utils.config import ExperimentConfig


def _write(tmp_path, text, name="scan.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_defaults():
    config = ExperimentConfig.from_sources()
    assert config.experiment == ["dimscan"]
    assert config.seed == DEFAULT_SEED
    assert config.axes(3) == [1]
    assert config.nodes_for(8) == 32


def test_file_values(tmp_path):
    path = _write(tmp_path, 'experiment = "dimscan"\nK = [3, 5]\nd = 2\np = ["2", "inf"]\nr = []\n')
    config = ExperimentConfig.from_sources(path)
    assert config.K == [3, 5]
    assert config.d == [2]
    assert config.p[0] == 2.0 and math.isinf(config.p[1])
    assert config.axes(2) == [1, 2]


def test_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("RIESZ_SEED", "5")
    assert ExperimentConfig.from_sources().seed == 5
    path = _write(tmp_path, "seed = 7\n")
    assert ExperimentConfig.from_sources(path).seed == 7
    assert ExperimentConfig.from_sources(path, {"seed": 9}).seed == 9


def test_dotenv_file(tmp_path):
    env = _write(tmp_path, "RIESZ_JOBS=3\n", name="local.env")
    assert ExperimentConfig.from_sources(env_file=str(env)).jobs == 3


def test_none_overrides_are_ignored(tmp_path):
    path = _write(tmp_path, "samples = 12\n")
    assert ExperimentConfig.from_sources(path, {"samples": None}).samples == 12


@pytest.mark.parametrize("text", [
    "colour = 1\n",
    'experiment = "fourier"\n',
    "K = [4]\nd = [20]\n",
    "g0 = 2\nK = [4]\n",
    "p = [0.5]\n",
    'experiment = "square-function"\np = ["inf"]\n',
    'setting = "hermite"\nexperiment = "ddstar-check"\n',
    'setting = "hermite"\np = [4]\nN = [8]\nquad_nodes = 10\n',
    "K = [1.5]\n",
    "phi = [2.0]\n",
])
def test_invalid(tmp_path, text):
    with pytest.raises(ConfigValidationError):
        ExperimentConfig.from_sources(_write(tmp_path, text))


def test_hermite_check_truncation_is_capped_in_cyclic_setting():
    with pytest.raises(ConfigValidationError, match=r"\(N\+1\)\^d"):
        ExperimentConfig.from_sources(overrides={"experiment": ["hermite-check"], "N": [200], "d": [4]})


def test_hermite_check_ignores_cyclic_grid_cap():
    config = ExperimentConfig.from_sources(overrides={"experiment": ["hermite-check"], "K": [64], "d": [5], "N": [2]})
    assert config.K == [64]


def test_missing_file(tmp_path):
    with pytest.raises(ConfigValidationError):
        ExperimentConfig.from_sources(tmp_path / "absent.toml")


def test_malformed_file(tmp_path):
    with pytest.raises(ConfigValidationError):
        ExperimentConfig.from_sources(_write(tmp_path, "K = [4\n"))


def test_problems_are_collected(tmp_path):
    with pytest.raises(ConfigValidationError) as excinfo:
        ExperimentConfig.from_sources(_write(tmp_path, 'setting = "torus"\nsamples = 0\n'))
    assert "setting" in str(excinfo.value)
    assert "samples" in str(excinfo.value)
