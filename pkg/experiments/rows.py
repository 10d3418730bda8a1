"""Result rows, witness storage and the per-row task type shared by the experiment modules."""
import hashlib
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Union

import numpy as np

from operators.cyclic_group import CyclicProductGroup, CyclicRieszSystem, SymmetricMeasure
from operators.pnorm import NormEstimate
from utils.formatters import format_cell

logger = logging.getLogger(__name__)

COLUMNS = (
    "experiment",
    "setting",
    "K",
    "d",
    "N",
    "p",
    "r",
    "sigma",
    "epsilon",
    "estimate_lower",
    "estimate_upper",
    "method",
    "iterations",
    "converged",
    "deviation",
    "seed",
    "runtime_ms",
    "witness_digest",
    "detail",
    "status",
)


@dataclass
class ResultRow:
    experiment: str
    setting: str
    K: Optional[int] = None
    d: Optional[int] = None
    N: Optional[int] = None
    p: Optional[float] = None
    r: Optional[int] = None
    sigma: Optional[float] = None
    epsilon: Optional[float] = None
    estimate_lower: Optional[float] = None
    estimate_upper: Optional[float] = None
    method: str = ""
    iterations: Optional[int] = None
    converged: Optional[bool] = None
    deviation: Optional[float] = None
    seed: Optional[int] = None
    runtime_ms: Optional[float] = None
    witness_digest: str = ""
    detail: str = ""
    status: str = "ok"
    witness: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def cells(self) -> List[str]:
        return [format_cell(getattr(self, column)) for column in COLUMNS]


def with_estimate(row: ResultRow, estimate: NormEstimate) -> ResultRow:
    """Copy the bracket, method and witness of a norm estimate into a row"""
    status = row.status if estimate.converged else "not-converged"
    return replace(
        row,
        estimate_lower=estimate.lower,
        estimate_upper=estimate.upper,
        method=estimate.method,
        iterations=estimate.iterations,
        converged=estimate.converged,
        witness=estimate.witness,
        status=status,
    )


def format_detail(**items: Any) -> str:
    """Deterministic key=value text, keys sorted"""
    return ";".join(f"{key}={format_cell(items[key])}" for key in sorted(items))


def parse_detail(text: str) -> Dict[str, str]:
    if not text:
        return {}
    return dict(item.split("=", 1) for item in text.split(";") if "=" in item)


def witness_digest(witness: np.ndarray) -> str:
    """First 16 hex characters of SHA-256 over the witness as complex128 bytes"""
    data = np.ascontiguousarray(np.asarray(witness, dtype=complex))
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


class WitnessStore:
    """Witness vectors keyed by digest, persisted as one .npz next to the CSV"""

    def __init__(self, witnesses: Optional[Mapping[str, np.ndarray]] = None):
        self._witnesses: Dict[str, np.ndarray] = dict(witnesses or {})

    def add(self, witness: np.ndarray) -> str:
        digest = witness_digest(witness)
        self._witnesses.setdefault(digest, np.asarray(witness, dtype=complex))
        return digest

    def get(self, digest: str) -> Optional[np.ndarray]:
        return self._witnesses.get(digest)

    def __len__(self) -> int:
        return len(self._witnesses)

    def save(self, path: Union[str, Path]) -> None:
        # keys sorted so the archive member order does not depend on completion order
        np.savez_compressed(path, **{k: self._witnesses[k] for k in sorted(self._witnesses)})

    @classmethod
    def load(cls, path: Union[str, Path]) -> "WitnessStore":
        with np.load(path) as archive:
            return cls({key: archive[key] for key in archive.files})


def witness_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".witnesses.npz")


class ScanTask(NamedTuple):
    """One unit of scan work; `base` identifies the row if `run` raises"""
    base: ResultRow
    run: Callable[[], List[ResultRow]]


def make_system(K: int, d: int, measure: str, g0: int, mem_cap: int) -> CyclicRieszSystem:
    """The cyclic Riesz system a row refers to"""
    group = CyclicProductGroup(K, d, mem_cap)
    mu = SymmetricMeasure.lazy(K) if measure == "lazy" else SymmetricMeasure.mu_g0(g0, K)
    return CyclicRieszSystem(group, mu, g0)
