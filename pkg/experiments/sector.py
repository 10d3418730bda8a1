"""Sampled sup of |m_sigma| over polysectors, at configured angles and at the angle p* for each p."""
import logging
import math
from dataclasses import replace
from functools import partial
from typing import List, Optional

from experiments.rows import ResultRow, ScanTask, format_detail
from operators.spectral_core import SectorSpec, p_star, sector_sup
from utils.config import ExperimentConfig

logger = logging.getLogger(__name__)


def _complex_text(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def sector_row(base: ResultRow, phi: float, p: Optional[float]) -> List[ResultRow]:
    sup = sector_sup(base.sigma, SectorSpec((phi, phi)))
    items = {"phi": phi, "z1": _complex_text(sup.z1), "z2": _complex_text(sup.z2)}
    if p is not None:
        items["angle"] = "p_star"
    status = "ok" if math.isfinite(sup.value) else "fail: unbounded on the sector"
    return [replace(base, estimate_lower=sup.value, method="sampled", detail=format_detail(**items), status=status)]


def build_tasks(config: ExperimentConfig) -> List[ScanTask]:
    tasks = []
    for sigma in config.sigma:
        for phi in config.phi:
            base = ResultRow("sector-sup", config.setting, sigma=sigma, seed=config.seed)
            tasks.append(ScanTask(base, partial(sector_row, base, phi, None)))
        for p in config.p:
            # p* is 0 at p = 2 and undefined at the endpoints
            if p == 2 or p == 1 or math.isinf(p):
                continue
            base = ResultRow("sector-sup", config.setting, p=p, sigma=sigma, seed=config.seed)
            tasks.append(ScanTask(base, partial(sector_row, base, p_star(p), p)))
    logger.info(f"sector-sup: {len(tasks)} tasks queued")
    return tasks
