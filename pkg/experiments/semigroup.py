"""
Contractivity of the heat semigroup e^{-tL} on l^p, with the spectral path
checked against the truncated power series and the semigroup law.
"""
import logging
from dataclasses import replace
from functools import partial
from typing import List

import numpy as np

from experiments.rows import ResultRow, ScanTask, format_detail, make_system
from operators.cyclic_group import GridFunction
from operators.hermite import CoeffTensor, HermiteTruncation, hermite_heat
from operators.pnorm import lp_norm
from utils.config import ExperimentConfig

logger = logging.getLogger(__name__)

CONTRACTION_SLACK = 1e-12
SERIES_TOL = 1e-10


def cyclic_rows(config: ExperimentConfig, base: ResultRow, t: float) -> List[ResultRow]:
    system = make_system(base.K, base.d, config.measure, config.g0, config.mem_cap)
    rng = np.random.default_rng(config.seed)
    ratios = {p: 0.0 for p in config.p}
    series_gap, law_gap = 0.0, 0.0
    for _ in range(config.samples):
        f = GridFunction.random(system.group, rng)
        smoothed = system.heat(t, f)
        for p in config.p:
            ratios[p] = max(ratios[p], lp_norm(smoothed.values, p) / lp_norm(f.values, p))
        scale = lp_norm(f.values, np.inf)
        series_gap = max(series_gap, lp_norm(smoothed.values - system.heat_series(t, f).values, np.inf) / scale)
        twice = system.heat(t, smoothed).values - system.heat(2 * t, f).values
        law_gap = max(law_gap, lp_norm(twice, np.inf) / scale)

    detail = format_detail(g0=config.g0, measure=config.measure, semigroup_law=law_gap, t=t)
    return [_judged(replace(base, p=p, estimate_lower=ratios[p], deviation=series_gap,
                            method="sampled", detail=detail)) for p in config.p]


def hermite_rows(config: ExperimentConfig, base: ResultRow, t: float) -> List[ResultRow]:
    """Coefficient space is l^2, so only p = 2 is measured here"""
    trunc = HermiteTruncation(base.d, base.N, config.mem_cap)
    rng = np.random.default_rng(config.seed)
    ratio, law_gap = 0.0, 0.0
    for _ in range(config.samples):
        c = CoeffTensor.random(trunc, rng)
        smoothed = hermite_heat(t, c)
        ratio = max(ratio, lp_norm(smoothed.coeffs, 2) / lp_norm(c.coeffs, 2))
        twice = hermite_heat(t, smoothed).coeffs - hermite_heat(2 * t, c).coeffs
        law_gap = max(law_gap, lp_norm(twice, np.inf) / lp_norm(c.coeffs, np.inf))

    detail = format_detail(semigroup_law=law_gap, t=t)
    return [_judged(replace(base, p=2.0, estimate_lower=ratio, deviation=law_gap, method="sampled", detail=detail))]


def _judged(row: ResultRow) -> ResultRow:
    if row.estimate_lower > 1 + CONTRACTION_SLACK:
        return replace(row, status="fail: not a contraction")
    if row.deviation > SERIES_TOL:
        return replace(row, status=f"fail: deviation above {SERIES_TOL:g}")
    return row


def build_tasks(config: ExperimentConfig) -> List[ScanTask]:
    tasks = []
    cyclic = config.setting == "cyclic"
    for size in (config.K if cyclic else config.N):
        for d in config.d:
            for t in config.t:
                if cyclic:
                    base = ResultRow("contraction", "cyclic", K=size, d=d, seed=config.seed)
                    tasks.append(ScanTask(base, partial(cyclic_rows, config, base, t)))
                else:
                    base = ResultRow("contraction", "hermite", d=d, N=size, seed=config.seed)
                    tasks.append(ScanTask(base, partial(hermite_rows, config, base, t)))
    logger.info(f"contraction: {len(tasks)} tasks queued")
    return tasks
