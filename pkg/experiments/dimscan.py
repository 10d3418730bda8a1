"""
Norm of the Riesz transforms R_r as the dimension grows.

p = 2 and p in {1, inf} are exact; any other p gets a Boyd lower bound and a
Riesz-Thorin upper bound interpolated between p = 2 and the nearer endpoint.
"""
import logging
import math
from dataclasses import replace
from functools import partial
from typing import List

from experiments.rows import ResultRow, ScanTask, format_detail, make_system, with_estimate
from operators.hermite import (
    HermiteTruncation,
    gauss_hermite,
    hermite_lp_ratio_search,
    riesz_hermite_norm2,
    riesz_hermite_operator,
)
from operators.pnorm import NormEstimate, boyd_estimate, interp_upper, multiplier_sup_estimate, opnorm_exact
from utils.config import ExperimentConfig

logger = logging.getLogger(__name__)


def cyclic_row(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    system = make_system(base.K, base.d, config.measure, config.g0, config.mem_cap)
    op = system.as_operator("riesz", r=base.r)
    p = base.p
    detail = {"g0": config.g0, "measure": config.measure}

    if p == 2:
        sup, witness = system.riesz_norm2(base.r)
        estimate = multiplier_sup_estimate(op, sup, witness)
    elif p == 1 or math.isinf(p):
        estimate = opnorm_exact(op, p, convolution=True)
    else:
        lower = boyd_estimate(op, p, config.restarts, config.seed, config.tol, config.maxiter)
        endpoint = 1.0 if p < 2 else math.inf
        norm2 = system.riesz_norm2(base.r)[0]
        end_norm = opnorm_exact(op, endpoint, convolution=True).lower
        upper = interp_upper(p, 2.0, norm2, endpoint, end_norm)
        estimate = NormEstimate(p, lower.lower, upper, "boyd", lower.witness, lower.iterations, lower.converged)
        detail["upper"] = f"interp(2,{'1' if endpoint == 1 else 'inf'})"

    return [replace(with_estimate(base, estimate), detail=format_detail(**detail))]


def hermite_row(config: ExperimentConfig, base: ResultRow) -> List[ResultRow]:
    trunc = HermiteTruncation(base.d, base.N, config.mem_cap)
    if base.p == 2:
        sup, witness = riesz_hermite_norm2(trunc, base.r)
        estimate = multiplier_sup_estimate(riesz_hermite_operator(trunc, base.r), sup, witness.coeffs)
        return [with_estimate(base, estimate)]

    n = config.nodes_for(base.N)
    estimate = hermite_lp_ratio_search(base.r, base.p, trunc, gauss_hermite(n), config.restarts,
                                       config.seed, config.maxiter)
    return [replace(with_estimate(base, estimate), detail=format_detail(quad_nodes=n))]


def build_tasks(config: ExperimentConfig) -> List[ScanTask]:
    """One task per (size, d, p, r) in config order"""
    tasks = []
    sizes = config.K if config.setting == "cyclic" else config.N
    for size in sizes:
        for d in config.d:
            for p in config.p:
                for r in config.axes(d):
                    if config.setting == "cyclic":
                        base = ResultRow("dimscan", "cyclic", K=size, d=d, p=p, r=r, seed=config.seed)
                        tasks.append(ScanTask(base, partial(cyclic_row, config, base)))
                    else:
                        base = ResultRow("dimscan", "hermite", d=d, N=size, p=p, r=r, seed=config.seed)
                        tasks.append(ScanTask(base, partial(hermite_row, config, base)))
    logger.info(f"dimscan: {len(tasks)} rows queued")
    return tasks
