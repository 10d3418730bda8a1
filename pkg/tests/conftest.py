import numpy as np
import pytest

from operators.cache_utils import clear_cache
from operators.cyclic_group import CyclicProductGroup, CyclicRieszSystem, SymmetricMeasure


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def fresh_cache():
    clear_cache()
    yield
    clear_cache()


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep a developer's .env and RIESZ_* variables out of the tests"""
    for name in ("RIESZ_SEED", "RIESZ_MEM_CAP", "RIESZ_JOBS", "RIESZ_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def make_system(K: int, d: int, g0: int = 1, measure: SymmetricMeasure = None) -> CyclicRieszSystem:
    group = CyclicProductGroup(K, d)
    return CyclicRieszSystem(group, measure or SymmetricMeasure.mu_g0(g0, K), g0)


@pytest.fixture
def system_8x2():
    return make_system(8, 2)


@pytest.fixture
def system_4x3():
    return make_system(4, 3)
