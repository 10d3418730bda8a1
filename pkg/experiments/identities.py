"""
Identity checks: Riesz factorisation, the double-difference identity, the
epsilon limit of the regularised factor and the Hermite coefficient identities.

Each row carries the largest residual seen in `deviation`; a residual above
its tolerance sets the status to fail.
"""
import logging
import math
from dataclasses import replace
from functools import partial
from typing import Callable, Dict, List

import numpy as np
from scipy import fft as sp_fft

from experiments.rows import ResultRow, ScanTask, format_detail, make_system
from operators.cyclic_group import GridFunction
from operators.hermite import (
    CoeffTensor,
    HermiteTruncation,
    apply_delta,
    apply_delta_adjoint,
    apply_riesz_hermite,
    apply_riesz_hermite_factored,
    gauss_hermite,
    hermite_joint_factor,
    quad_lp_norm,
    riesz_hermite_norm2,
)
from operators.pnorm import lp_norm
from utils.config import ExperimentConfig
from utils.validators import grid_points, is_monotone_decreasing

logger = logging.getLogger(__name__)

FACTOR_TOL = 1e-12
HERMITE_TOL = 1e-13
DDSTAR_TOL = 1e-13
NORMALISATION_TOL = 1e-12
PARSEVAL_TOL = 1e-10


def _judged(row: ResultRow, tolerance: float) -> ResultRow:
    if row.deviation is not None and row.deviation > tolerance:
        return replace(row, status=f"fail: deviation above {tolerance:g}")
    return row


# -- factor-check -----------------------------------------------------------------------

def cyclic_factor_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    system = make_system(base.K, base.d, config.measure, config.g0, config.mem_cap)
    rng = np.random.default_rng(config.seed)
    axes = config.axes(base.d)
    worst = {r: 0.0 for r in axes}
    # functions are drawn one at a time; at K^d near the cap a batch would not fit.
    # Large grids spread each FFT over `jobs` threads instead.
    with sp_fft.set_workers(config.jobs):
        for _ in range(config.samples):
            f = GridFunction.random(system.group, rng)
            scale = lp_norm(f.values, 2)
            for r in axes:
                gap = system.riesz(r, f).values - system.factored_riesz(r, f).values
                worst[r] = max(worst[r], lp_norm(gap, 2) / scale)

    detail = format_detail(g0=config.g0, measure=config.measure, samples=config.samples)
    return [_judged(replace(base, r=r, deviation=worst[r], method="identity", detail=detail), FACTOR_TOL)
            for r in axes]


def hermite_factor_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    trunc = HermiteTruncation(base.d, base.N, config.mem_cap)
    rng = np.random.default_rng(config.seed)
    axes = config.axes(base.d)
    worst = {r: 0.0 for r in axes}
    for _ in range(config.samples):
        c = CoeffTensor.random(trunc, rng)
        scale = lp_norm(c.coeffs, 2)
        for r in axes:
            gap = apply_riesz_hermite(r, c).coeffs - apply_riesz_hermite_factored(r, c).coeffs
            worst[r] = max(worst[r], lp_norm(gap, 2) / scale)

    detail = format_detail(samples=config.samples)
    return [_judged(replace(base, r=r, deviation=worst[r], method="identity", detail=detail), HERMITE_TOL)
            for r in axes]


# -- ddstar-check -----------------------------------------------------------------------

def ddstar_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    """
    partial partial^* = 2 (I - P) on basis vectors, the sqrt(2) normalisation of the
    Riesz transform built from it and the dimension of the joint kernel
    """
    system = make_system(base.K, base.d, config.measure, config.g0, config.mem_cap)
    check = system.double_difference_check(np.random.default_rng(config.seed))
    kernel = system.kernel_dimension()
    detail = format_detail(
        g0=config.g0,
        measure=config.measure,
        measure_matches=check.measure_matches,
        normalisation=check.normalisation_deviation,
        kernel_dim=kernel,
    )
    row = replace(base, deviation=check.deviation, method="identity", detail=detail)

    if kernel != 1:
        return [replace(row, status=f"fail: kernel dimension {kernel}")]
    if not check.measure_matches:
        logger.info(f"ddstar-check K={base.K} d={base.d}: measure is not mu_g0, deviation {check.deviation:.3e} reported")
        return [row]
    if check.normalisation_deviation > NORMALISATION_TOL:
        return [replace(row, status=f"fail: normalisation deviation above {NORMALISATION_TOL:g}")]
    return [_judged(row, DDSTAR_TOL)]


# -- eps-limit --------------------------------------------------------------------------

def _eps_rows(base: ResultRow, epsilons: List[float], deviation: Callable[[float], float]) -> List[ResultRow]:
    rows = [replace(base, epsilon=eps, deviation=deviation(eps), method="identity") for eps in epsilons]
    ordered = sorted(rows, key=lambda row: -row.epsilon)
    if not is_monotone_decreasing([row.deviation for row in ordered], slack=1e-15):
        logger.warning(f"eps-limit d={base.d} r={base.r}: deviation is not monotone in epsilon")
        rows = [replace(row, status="fail: not monotone in epsilon") for row in rows]
    return rows


def cyclic_eps_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    system = make_system(base.K, base.d, config.measure, config.g0, config.mem_cap)
    f = GridFunction.random(system.group, np.random.default_rng(config.seed))
    f = f.scaled(1.0 / lp_norm(f.values, 2))
    rows = []
    for r in config.axes(base.d):
        limit = system.joint_factor(r, base.sigma, 0.0, f).values

        def deviation(eps: float, r=r, limit=limit) -> float:
            return lp_norm(system.joint_factor(r, base.sigma, eps, f).values - limit, 2)

        rows.extend(_eps_rows(replace(base, r=r), config.epsilon, deviation))
    return rows


def hermite_eps_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    trunc = HermiteTruncation(base.d, base.N, config.mem_cap)
    c = CoeffTensor.random(trunc, np.random.default_rng(config.seed))
    c = CoeffTensor(c.coeffs / lp_norm(c.coeffs, 2), trunc)
    rows = []
    for r in config.axes(base.d):
        limit = hermite_joint_factor(r, base.sigma, 0.0, c).coeffs

        def deviation(eps: float, r=r, limit=limit) -> float:
            return lp_norm(hermite_joint_factor(r, base.sigma, eps, c).coeffs - limit, 2)

        rows.extend(_eps_rows(replace(base, r=r), config.epsilon, deviation))
    return rows


# -- hermite-check ----------------------------------------------------------------------

def _hermite_checks(config: ExperimentConfig, trunc: HermiteTruncation) -> Dict[str, float]:
    rng = np.random.default_rng(config.seed)
    d, N = trunc.d, trunc.N
    checks: Dict[str, float] = {}

    worst_dd, worst_adj = 0.0, 0.0
    for _ in range(min(config.samples, 20)):
        c, c2 = CoeffTensor.random(trunc, rng), CoeffTensor.random(trunc, rng)
        for r in range(1, d + 1):
            k_r = np.arange(N + 1).reshape([N + 1 if s == r - 1 else 1 for s in range(d)])
            twice = apply_delta_adjoint(r, apply_delta(r, c)).tensor
            scale = 2 * N * lp_norm(c.coeffs, math.inf)
            worst_dd = max(worst_dd, float(np.max(np.abs(twice - 2 * k_r * c.tensor))) / scale)
            lhs = np.vdot(c2.coeffs, apply_delta(r, c).coeffs)
            rhs = np.vdot(apply_delta_adjoint(r, c2).coeffs, c.coeffs)
            worst_adj = max(worst_adj, abs(lhs - rhs) / (lp_norm(c.coeffs, 2) * lp_norm(c2.coeffs, 2)))
    checks["delta-star-delta"] = worst_dd
    checks["delta-adjoint"] = worst_adj

    origin = [0] * d
    e1 = [1] + [0] * (d - 1)
    gap = apply_riesz_hermite(1, CoeffTensor.basis(trunc, e1)).coeffs - CoeffTensor.basis(trunc, origin).coeffs
    basis_gap = lp_norm(gap, math.inf)
    if d >= 2:
        k = [1, 1] + [0] * (d - 2)
        target = CoeffTensor.basis(trunc, [0, 1] + [0] * (d - 2)).coeffs * 2 ** -0.5
        basis_gap = max(basis_gap, lp_norm(apply_riesz_hermite(1, CoeffTensor.basis(trunc, k)).coeffs - target, math.inf))
    checks["riesz-basis"] = basis_gap

    checks["norm2"] = max(abs(riesz_hermite_norm2(trunc, r)[0] - 1.0) for r in range(1, d + 1))
    return checks


def hermite_check_rows(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    trunc = HermiteTruncation(base.d, base.N, config.mem_cap)
    rows = [
        _judged(replace(base, deviation=value, method="identity", detail=format_detail(check=name)), HERMITE_TOL)
        for name, value in _hermite_checks(config, trunc).items()
    ]

    n = max(config.nodes_for(base.N), 2 * base.N)
    if grid_points(n, base.d) <= config.mem_cap:
        rule = gauss_hermite(n)
        c = CoeffTensor.random(trunc, np.random.default_rng(config.seed))
        gap = abs(quad_lp_norm(c, 2.0, rule) - lp_norm(c.coeffs, 2)) / lp_norm(c.coeffs, 2)
        rows.append(_judged(replace(base, deviation=gap, method="identity",
                                    detail=format_detail(check="parseval", quad_nodes=n)), PARSEVAL_TOL))
    else:
        logger.info(f"hermite-check N={base.N} d={base.d}: quadrature grid above the cap, Parseval skipped")
    return rows


def build_tasks(config: ExperimentConfig, experiment: str) -> List[ScanTask]:
    tasks = []
    hermite = config.setting == "hermite" or experiment == "hermite-check"
    sizes = config.N if hermite else config.K
    sigmas = config.sigma if experiment == "eps-limit" else [None]
    for size in sizes:
        for d in config.d:
            for sigma in sigmas:
                if hermite:
                    base = ResultRow(experiment, "hermite", d=d, N=size, sigma=sigma, seed=config.seed)
                else:
                    base = ResultRow(experiment, "cyclic", K=size, d=d, sigma=sigma, seed=config.seed)
                tasks.append(ScanTask(base, partial(_HANDLERS[(experiment, hermite)], config, base)))
    logger.info(f"{experiment}: {len(tasks)} tasks queued")
    return tasks


_HANDLERS = {
    ("factor-check", False): cyclic_factor_rows,
    ("factor-check", True): hermite_factor_rows,
    ("ddstar-check", False): ddstar_rows,
    ("eps-limit", False): cyclic_eps_rows,
    ("eps-limit", True): hermite_eps_rows,
    ("hermite-check", True): hermite_check_rows,
}
