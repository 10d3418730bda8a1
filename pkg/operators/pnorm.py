"""
l^p -> l^p operator norm estimation for the linear maps of the other modules.

Exact values are only claimed for p in {1, 2, inf}; everything else is a
lower bound certified by a stored witness, optionally bracketed from above by
Riesz-Thorin interpolation.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from operators.exceptions import AdjointMismatchError, DomainError
from utils.validators import conjugate_exponent, require_exponent, require_int_at_least, require_positive

logger = logging.getLogger(__name__)

METHODS = ("exact-1", "exact-2", "exact-inf", "boyd", "brute", "interp", "quad-search")

DEFAULT_SEED = 20240607

Operator = Union[LinearOperator, np.ndarray]


@dataclass(frozen=True)
class NormEstimate:
    """A bracket [lower, upper] for ||A||_{p->p}; lower is attained by witness"""
    p: float
    lower: float
    upper: Optional[float]
    method: str
    witness: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown estimation method {self.method!r}")
        if self.upper is not None and self.lower > self.upper + 1e-12 * max(1.0, abs(self.upper)):
            raise DomainError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.witness is not None:
            witness = np.array(self.witness)
            witness.setflags(write=False)
            object.__setattr__(self, "witness", witness)


def lp_norm(f, p: float) -> float:
    """
    (sum |f_i|^p)^(1/p), the max for p = inf

    Entries are scaled by the largest modulus first so large p neither
    overflows nor underflows; numpy's pairwise sum does the rest.
    """
    p = require_exponent(p)
    a = np.abs(np.asarray(f)).ravel()
    if a.size == 0:
        return 0.0
    top = float(a.max())
    if top == 0.0 or math.isinf(p):
        return top
    if p == 1:
        return float(np.sum(a))
    return top * float(np.sum((a / top) ** p)) ** (1.0 / p)


def as_operator(apply: Callable, adjoint_apply: Callable, n: int, dtype=complex) -> LinearOperator:
    """Square LinearOperator from a map and its adjoint"""
    require_int_at_least("n", n, 1)
    return LinearOperator((n, n), matvec=apply, rmatvec=adjoint_apply, dtype=dtype)


def _linear(op: Operator) -> LinearOperator:
    return op if isinstance(op, LinearOperator) else aslinearoperator(np.asarray(op))


def _is_real(op: LinearOperator) -> bool:
    return not np.issubdtype(np.dtype(op.dtype), np.complexfloating)


def ratio(op: Operator, x, p: float) -> float:
    """||A x||_p / ||x||_p"""
    op = _linear(op)
    x = np.asarray(x)
    denominator = lp_norm(x, p)
    if denominator == 0:
        raise DomainError("the zero vector cannot witness a norm")
    return lp_norm(op.matvec(x), p) / denominator


def _phase(v: np.ndarray) -> np.ndarray:
    """v/|v| entrywise, 0 at exact zeros"""
    a = np.abs(v)
    out = np.zeros_like(v)
    nonzero = a > 0
    out[nonzero] = v[nonzero] / a[nonzero]
    return out


def _basis(n: int, j: int, dtype) -> np.ndarray:
    e = np.zeros(n, dtype=dtype)
    e[j] = 1.0
    return e


def opnorm_exact(op: Operator, p: float, convolution: bool = False, tol: float = 1e-10,
                 maxiter: int = 10000, seed: int = DEFAULT_SEED) -> NormEstimate:
    """
    Exact ||A||_{p->p} for p in {1, 2, inf}

    p = 1 probes every column, p = inf every row (through the adjoint) and
    p = 2 runs power iteration on A*A. With convolution=True the operator is
    taken to commute with translations, so one column (row) stands for all.
    """
    op = _linear(op)
    p = require_exponent(p)
    n = op.shape[1]
    probes = [0] if convolution else range(n)
    dtype = op.dtype

    if p == 1:
        best, best_j = -1.0, 0
        for j in probes:
            value = lp_norm(op.matvec(_basis(n, j, dtype)), 1)
            if value > best:
                best, best_j = value, j
        return NormEstimate(1.0, best, best, "exact-1", _basis(n, best_j, dtype), len(probes), True)

    if math.isinf(p):
        best, best_row = -1.0, None
        for i in probes:
            row = op.rmatvec(_basis(op.shape[0], i, dtype))
            value = lp_norm(row, 1)
            if value > best:
                best, best_row = value, row
        witness = _phase(np.asarray(best_row))
        if not np.any(witness):
            witness = np.ones(n, dtype=dtype)
        return NormEstimate(math.inf, best, best, "exact-inf", witness, len(probes), True)

    if p == 2:
        return _power_iteration(op, tol, maxiter, seed)

    raise DomainError(f"no exact formula for p = {p}; use boyd_estimate")


def _random_vector(n: int, rng: np.random.Generator, real: bool) -> np.ndarray:
    x = rng.standard_normal(n)
    if not real:
        x = x + 1j * rng.standard_normal(n)
    return x


def _power_iteration(op: LinearOperator, tol: float, maxiter: int, seed: int) -> NormEstimate:
    rng = np.random.default_rng(seed)
    x = _random_vector(op.shape[1], rng, _is_real(op))
    x = x / np.linalg.norm(x)
    sigma, converged, iterations = 0.0, False, 0
    for iterations in range(1, maxiter + 1):
        y = op.matvec(x)
        sigma = float(np.linalg.norm(y))
        if sigma == 0.0:
            converged = True
            break
        z = op.rmatvec(y)
        residual = float(np.linalg.norm(z - sigma ** 2 * x))
        z_norm = float(np.linalg.norm(z))
        if residual <= tol * sigma ** 2:
            converged = True
            break
        x = z / z_norm

    lower = float(np.linalg.norm(op.matvec(x)))
    if not converged:
        logger.warning("power iteration stopped after %d iterations at %.17g", iterations, lower)
    upper = lower * (1 + tol) if converged else None
    return NormEstimate(2.0, lower, upper, "exact-2", x, iterations, converged)


def multiplier_sup_estimate(op: Operator, sup: float, witness) -> NormEstimate:
    """
    l^2 norm of a Fourier multiplier on a finite abelian group

    The norm equals the sup of the multiplier modulus and a plane wave at the
    argmax attains it; the lower bound is re-derived from that witness.
    """
    lower = min(ratio(op, witness, 2.0), sup)
    return NormEstimate(2.0, lower, float(sup), "exact-2", np.asarray(witness), 1, True)


def check_adjoint(op: Operator, seed: int = DEFAULT_SEED, tol: float = 1e-10) -> float:
    """
    Relative defect |<Ax, y> - <x, A*y>| / (||Ax|| ||y|| + ||x|| ||A*y||) on random vectors

    Raises:
        AdjointMismatchError: when the defect is above tol
    """
    op = _linear(op)
    rng = np.random.default_rng(seed)
    real = _is_real(op)
    x = _random_vector(op.shape[1], rng, real)
    y = _random_vector(op.shape[0], rng, real)
    ax, aty = op.matvec(x), op.rmatvec(y)
    scale = np.linalg.norm(ax) * np.linalg.norm(y) + np.linalg.norm(x) * np.linalg.norm(aty)
    defect = abs(np.vdot(y, ax) - np.vdot(aty, x)) / scale if scale > 0 else 0.0
    if defect > tol:
        raise AdjointMismatchError(f"map and adjoint disagree: inner-product defect {defect:.3e}")
    return float(defect)


def _dual(v: np.ndarray, q: float) -> np.ndarray:
    """|v|^(q-1) phase(v), scaled to unit norm in the exponent conjugate to q"""
    a = np.abs(v)
    top = a.max() if a.size else 0.0
    if top == 0:
        return np.zeros_like(v)
    u = v / top
    out = np.abs(u) ** (q - 1) * _phase(u)
    return out / lp_norm(out, conjugate_exponent(q))


class BoydRun(NamedTuple):
    ratio: float
    x: np.ndarray
    history: List[float]
    iterations: int
    converged: bool


def boyd_run(op: Operator, p: float, x0, tol: float = 1e-9, maxiter: int = 1000) -> BoydRun:
    """
    One start of the nonlinear power method for ||A||_{p->p}

    y = A x, s = dual_p(y), z = A* s, x <- dual_q(z). The ratio sequence
    ||A x_k||_p is non-decreasing; it has converged once successive values
    agree to tol (relative) three times in a row.
    """
    op = _linear(op)
    q = conjugate_exponent(p)
    x = np.asarray(x0)
    x = x / lp_norm(x, p)
    history: List[float] = []
    streak, converged, iterations = 0, False, 0
    for iterations in range(1, maxiter + 1):
        y = op.matvec(x)
        gamma = lp_norm(y, p)
        if history and gamma < history[-1] * (1 - 1e-12):
            logger.debug("boyd ratio decreased from %.17g to %.17g", history[-1], gamma)
        if history and abs(gamma - history[-1]) < tol * max(gamma, 1e-300):
            streak += 1
        else:
            streak = 0
        history.append(gamma)
        if gamma == 0.0 or streak >= 3:
            converged = True
            break
        z = op.rmatvec(_dual(y, p))
        if not np.any(z):
            converged = True
            break
        x = _dual(z, q)

    return BoydRun(ratio(op, x, p), x, history, iterations, converged)


def boyd_estimate(op: Operator, p: float, restarts: int = 16, seed: int = DEFAULT_SEED,
                  tol: float = 1e-9, maxiter: int = 1000) -> NormEstimate:
    """
    Lower bound for ||A||_{p->p}, 1 < p < inf, from the best of several Boyd starts

    Start 0 is the all-ones vector; start i >= 1 is drawn from
    default_rng(seed + i), real when the operator is real and complex otherwise.
    Ties keep the lowest start index.
    """
    p = require_exponent(p, allow_one=False, allow_inf=False)
    require_int_at_least("restarts", restarts, 1)
    require_positive("tol", tol)
    op = _linear(op)
    check_adjoint(op, seed)

    n = op.shape[1]
    real = _is_real(op)
    best: Optional[BoydRun] = None
    total = 0
    for i in range(restarts):
        x0 = np.ones(n) if i == 0 else _random_vector(n, np.random.default_rng(seed + i), real)
        run = boyd_run(op, p, x0, tol, maxiter)
        total += run.iterations
        if best is None or run.ratio > best.ratio:
            best = run

    if not best.converged:
        logger.warning("boyd iteration at p=%s did not converge within %d iterations", p, maxiter)
    return NormEstimate(p, best.ratio, None, "boyd", best.x, total, best.converged)


def _sphere_points(n: int, angles: np.ndarray) -> np.ndarray:
    """Directions in R^n (n = 2 or 3) from one or two angle columns"""
    if n == 2:
        return np.stack([np.cos(angles[:, 0]), np.sin(angles[:, 0])], axis=1)
    theta, phi = angles[:, 0], angles[:, 1]
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1)


def _ratios(matrix: np.ndarray, points: np.ndarray, p: float) -> np.ndarray:
    images = points @ matrix.T
    if math.isinf(p):
        return np.abs(images).max(axis=1) / np.abs(points).max(axis=1)
    return (np.sum(np.abs(images) ** p, axis=1) / np.sum(np.abs(points) ** p, axis=1)) ** (1.0 / p)


def brute_small(matrix, p: float, density: int = 1000, min_window: float = 1e-9) -> float:
    """
    Real-input ||A||_{p->p} for at most three columns by exhaustive angular search

    The ratio is homogeneous, so it is sampled on the unit Euclidean sphere
    (a half sphere suffices by symmetry) at `density` points per angle. The
    grid maximum is then refined locally, halving the window around the
    argmax until it is narrower than min_window radians.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise DomainError("brute_small needs an explicit matrix")
    n = matrix.shape[1]
    if n > 3:
        raise DomainError(f"brute_small handles at most 3 columns, got {n}")
    require_int_at_least("density", density, 1000)
    p = require_exponent(p)
    if n == 1:
        return lp_norm(matrix[:, 0], p)

    dims = n - 1
    spans = [(0.0, math.pi)] * dims
    best_value, best_angles = -1.0, np.zeros(dims)
    # coarse pass over the whole half sphere
    axes = [np.linspace(lo, hi, density) for lo, hi in spans]
    step = 64 if dims == 2 else density
    for start in range(0, density, step):
        block = [axes[0][start:start + step]] + axes[1:]
        grid = np.stack([g.ravel() for g in np.meshgrid(*block, indexing="ij")], axis=1)
        values = _ratios(matrix, _sphere_points(n, grid), p)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value, best_angles = float(values[k]), grid[k]

    window = math.pi / density * 2
    local = 201 if dims == 1 else 41
    require_positive("min_window", min_window)
    while window > min_window:
        axes = [np.linspace(a - window, a + window, local) for a in best_angles]
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        values = _ratios(matrix, _sphere_points(n, grid), p)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value, best_angles = float(values[k]), grid[k]
        window /= 2
    return best_value


def _inverse(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def interp_upper(p: float, p0: float, bound0: float, p1: float, bound1: float) -> float:
    """
    Riesz-Thorin bound bound0^(1-theta) bound1^theta with 1/p = (1-theta)/p0 + theta/p1
    """
    for exponent in (p, p0, p1):
        require_exponent(exponent)
    require_positive("bound0", bound0)
    require_positive("bound1", bound1)
    if not min(p0, p1) <= p <= max(p0, p1):
        raise DomainError(f"p = {p} is not between {p0} and {p1}")
    if p0 == p1:
        return float(bound0)
    theta = (_inverse(p0) - _inverse(p)) / (_inverse(p0) - _inverse(p1))
    return float(bound0 ** (1.0 - theta) * bound1 ** theta)
