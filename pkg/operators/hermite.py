"""
The Ornstein-Uhlenbeck system on truncated Hermite coefficient tensors.

A function sum_k c[k] H_k(x) with normalized Hermite polynomials H_k
(orthonormal for the weight e^{-|x|^2}) is stored as the tensor c indexed by
k in {0, ..., N}^d. L_r acts diagonally with eigenvalue 2 k_r and
delta_r = d/dx_r lowers k_r: delta_r H_k = sqrt(2 k_r) H_{k - e_r}.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize
from scipy.sparse.linalg import LinearOperator

from operators.cache_utils import cache_data
from operators.exceptions import DomainError, ShapeMismatchError
from operators.pnorm import DEFAULT_SEED, NormEstimate, as_operator
from operators.spectral_core import (
    JointMultiplier,
    ProductSpectrum,
    apply_diagonal,
    factor_multiplier,
    heat_multiplier,
)
from utils.validators import (
    DEFAULT_MEM_CAP,
    check_budget,
    grid_points,
    require_axis,
    require_exponent,
    require_int_at_least,
    require_non_negative,
    require_positive,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HermiteTruncation:
    """Degrees 0..N in each of d coordinates; d <= 4 is the practical range for quadrature"""
    d: int
    N: int
    mem_cap: int = DEFAULT_MEM_CAP

    def __post_init__(self):
        require_int_at_least("d", self.d, 1)
        require_int_at_least("N", self.N, 1)
        check_budget(grid_points(self.N + 1, self.d), self.mem_cap, what=f"Hermite truncation N={self.N} d={self.d}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N + 1,) * self.d

    @property
    def size(self) -> int:
        return (self.N + 1) ** self.d

    def spectrum(self) -> ProductSpectrum:
        return ProductSpectrum((2.0 * np.arange(self.N + 1),) * self.d)


@dataclass(frozen=True)
class CoeffTensor:
    coeffs: np.ndarray
    trunc: HermiteTruncation

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).ravel()
        if coeffs.size != self.trunc.size:
            raise ShapeMismatchError(f"{coeffs.size} coefficients for a truncation of size {self.trunc.size}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def tensor(self) -> np.ndarray:
        return self.coeffs.reshape(self.trunc.shape)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, trunc: HermiteTruncation) -> "CoeffTensor":
        if tuple(np.shape(tensor)) != trunc.shape:
            raise ShapeMismatchError(f"tensor shape {np.shape(tensor)} is not {trunc.shape}")
        return cls(np.asarray(tensor).ravel(), trunc)

    @classmethod
    def basis(cls, trunc: HermiteTruncation, k: Sequence[int]) -> "CoeffTensor":
        if len(k) != trunc.d or any(not 0 <= ki <= trunc.N for ki in k):
            raise DomainError(f"multi-index {tuple(k)} is outside {{0..{trunc.N}}}^{trunc.d}")
        tensor = np.zeros(trunc.shape, dtype=complex)
        tensor[tuple(k)] = 1.0
        return cls.from_tensor(tensor, trunc)

    @classmethod
    def random(cls, trunc: HermiteTruncation, rng: np.random.Generator, complex_values: bool = True) -> "CoeffTensor":
        values = rng.standard_normal(trunc.size)
        if complex_values:
            values = values + 1j * rng.standard_normal(trunc.size)
        return cls(values, trunc)


@dataclass(frozen=True)
class QuadratureRule:
    """n-point Gauss-Hermite rule for the weight e^{-x^2}, used on every axis"""
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size


def _axis_view(values: np.ndarray, axis: int, d: int) -> np.ndarray:
    shape = [1] * d
    shape[axis] = values.size
    return values.reshape(shape)


def _check(c: CoeffTensor, r: int) -> np.ndarray:
    require_axis(r, c.trunc.d)
    return c.tensor


def apply_ou_multiplier(m: JointMultiplier, c: CoeffTensor) -> CoeffTensor:
    """Scale the coefficient at k by m(2 k_1, ..., 2 k_d); zero_policy at k = 0"""
    return CoeffTensor.from_tensor(apply_diagonal(m, c.trunc.spectrum(), c.tensor), c.trunc)


def hermite_heat(t: float, c: CoeffTensor) -> CoeffTensor:
    require_non_negative("t", t)
    return apply_ou_multiplier(heat_multiplier(t), c)


def hermite_joint_factor(r: int, sigma: float, epsilon: float, c: CoeffTensor) -> CoeffTensor:
    """(L_r + eps)^sigma (L_1 + ... + L_d + d eps)^{-sigma} Pi_{0,r}"""
    require_axis(r, c.trunc.d)
    require_positive("sigma", sigma)
    require_non_negative("epsilon", epsilon)
    return apply_ou_multiplier(factor_multiplier(r, sigma, epsilon), c)


def _lowering_weights(N: int) -> np.ndarray:
    return np.sqrt(2.0 * np.arange(1, N + 1))


def apply_delta(r: int, c: CoeffTensor) -> CoeffTensor:
    """out[m] = sqrt(2 (m_r + 1)) c[m + e_r]; the top degree along r receives nothing"""
    tensor = _check(c, r)
    axis, d = r - 1, c.trunc.d
    src, dst = [slice(None)] * d, [slice(None)] * d
    src[axis], dst[axis] = slice(1, None), slice(None, -1)
    out = np.zeros_like(tensor)
    out[tuple(dst)] = tensor[tuple(src)] * _axis_view(_lowering_weights(c.trunc.N), axis, d)
    return CoeffTensor.from_tensor(out, c.trunc)


def apply_delta_adjoint(r: int, c: CoeffTensor) -> CoeffTensor:
    """out[m] = sqrt(2 m_r) c[m - e_r]; the top degree along r is cut off"""
    tensor = _check(c, r)
    axis, d = r - 1, c.trunc.d
    src, dst = [slice(None)] * d, [slice(None)] * d
    src[axis], dst[axis] = slice(None, -1), slice(1, None)
    out = np.zeros_like(tensor)
    out[tuple(dst)] = tensor[tuple(src)] * _axis_view(_lowering_weights(c.trunc.N), axis, d)
    return CoeffTensor.from_tensor(out, c.trunc)


@cache_data
def _inverse_sqrt_total(N: int, d: int) -> np.ndarray:
    """(2|k|)^{-1/2}, 0 at k = 0"""
    total = ProductSpectrum((2.0 * np.arange(N + 1),) * d).total()
    out = np.zeros_like(total)
    positive = total > 0
    out[positive] = 1.0 / np.sqrt(total[positive])
    return out


def apply_riesz_hermite(r: int, c: CoeffTensor) -> CoeffTensor:
    """delta_r (L_1 + ... + L_d)^{-1/2} Pi_0, the direct form"""
    _check(c, r)
    scaled = CoeffTensor.from_tensor(c.tensor * _inverse_sqrt_total(c.trunc.N, c.trunc.d), c.trunc)
    return apply_delta(r, scaled)


def apply_riesz_hermite_adjoint(r: int, c: CoeffTensor) -> CoeffTensor:
    lowered = apply_delta_adjoint(r, c)
    return CoeffTensor.from_tensor(lowered.tensor * _inverse_sqrt_total(c.trunc.N, c.trunc.d), c.trunc)


def apply_riesz_hermite_factored(r: int, c: CoeffTensor) -> CoeffTensor:
    """(delta_r L_r^{-1/2} Pi_{0,r}) (L_r^{1/2} (L_1 + ... + L_d)^{-1/2} Pi_{0,r})"""
    factor = hermite_joint_factor(r, 0.5, 0.0, c)
    lam_r = _axis_view(2.0 * np.arange(c.trunc.N + 1), r - 1, c.trunc.d)
    with np.errstate(divide="ignore"):
        inverse_sqrt = np.where(lam_r > 0, 1.0 / np.sqrt(lam_r), 0.0)
    return apply_delta(r, CoeffTensor.from_tensor(factor.tensor * inverse_sqrt, c.trunc))


def riesz_hermite_norm2(trunc: HermiteTruncation, r: int) -> Tuple[float, CoeffTensor]:
    """
    Exact coefficient-space l^2 norm of R_r and a basis tensor attaining it

    R_r sends H_k to sqrt(k_r / |k|) H_{k - e_r} and distinct k to distinct
    targets, so the norm is the largest of those factors: 1, at k = e_r.
    """
    require_axis(r, trunc.d)
    lam_r = np.broadcast_to(_axis_view(2.0 * np.arange(trunc.N + 1), r - 1, trunc.d), trunc.shape)
    total = trunc.spectrum().total()
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = np.sqrt(np.where(total > 0, lam_r / total, 0.0))
    flat = int(np.argmax(gains))
    k = np.unravel_index(flat, trunc.shape)
    return float(gains.ravel()[flat]), CoeffTensor.basis(trunc, [int(i) for i in k])


def riesz_hermite_operator(trunc: HermiteTruncation, r: int) -> LinearOperator:
    """R_r on flattened coefficient tensors, adjoint included"""
    require_axis(r, trunc.d)

    def matvec(x):
        return apply_riesz_hermite(r, CoeffTensor(x, trunc)).coeffs

    def rmatvec(y):
        return apply_riesz_hermite_adjoint(r, CoeffTensor(y, trunc)).coeffs

    return as_operator(matvec, rmatvec, trunc.size)


# -- quadrature -----------------------------------------------------------------------

_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)


def _scaled_top_pair(x: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """H_n(x) and H_{n-1}(x) divided by exp(log_scale), which keeps them finite far in the tails"""
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.pi ** -0.25)
    log_scale = np.zeros_like(x)
    for k in range(n):
        prev, cur = cur, x * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur[big] /= _RESCALE
            prev[big] /= _RESCALE
            log_scale[big] += _LOG_RESCALE
    return cur, prev, log_scale


@cache_data
def _golub_welsch(n: int) -> Tuple[np.ndarray, np.ndarray]:
    off_diagonal = np.sqrt(np.arange(1, n) / 2.0)
    nodes = eigh_tridiagonal(np.zeros(n), off_diagonal, eigvals_only=True)
    # Newton on H_n, with H_n' = sqrt(2n) H_{n-1}
    for _ in range(2):
        top, below, _ = _scaled_top_pair(nodes, n)
        nodes = nodes - top / (math.sqrt(2.0 * n) * below)
    asymmetry = float(np.max(np.abs(nodes + nodes[::-1])))
    if asymmetry > 1e-14 * max(1.0, float(np.max(np.abs(nodes)))):
        logger.debug("Gauss-Hermite nodes for n=%d asymmetric by %.3e before symmetrisation", n, asymmetry)
    nodes = (nodes - nodes[::-1]) / 2.0
    # Christoffel-Darboux: w_j = 1 / sum_{k<n} H_k(x_j)^2 = 1 / (n H_{n-1}(x_j)^2)
    _, below, log_scale = _scaled_top_pair(nodes, n)
    weights = np.exp(-math.log(n) - 2.0 * (np.log(np.abs(below)) + log_scale))
    weights = (weights + weights[::-1]) / 2.0
    return nodes, weights


def gauss_hermite(n: int) -> QuadratureRule:
    """Gauss-Hermite nodes and weights from the eigenpairs of the Jacobi matrix"""
    require_int_at_least("n", n, 1)
    nodes, weights = _golub_welsch(n)
    return QuadratureRule(nodes, weights)


@cache_data
def _hermite_matrix(N: int, n: int) -> np.ndarray:
    """H_k(node_j) for k = 0..N, via the normalized three-term recurrence"""
    x = _golub_welsch(n)[0]
    H = np.zeros((N + 1, n))
    H[0] = math.pi ** -0.25
    if N >= 1:
        H[1] = math.sqrt(2.0) * x * H[0]
    for k in range(1, N):
        H[k + 1] = x * math.sqrt(2.0 / (k + 1)) * H[k] - math.sqrt(k / (k + 1)) * H[k - 1]
    return H


def synthesize(c: CoeffTensor, rule: QuadratureRule, mem_cap: Optional[int] = None) -> np.ndarray:
    """Values of sum_k c[k] H_k on the tensor grid of quadrature nodes, shape (n,)*d"""
    d = c.trunc.d
    check_budget(grid_points(rule.n, d), mem_cap or c.trunc.mem_cap, what=f"quadrature grid n={rule.n} d={d}")
    H = _hermite_matrix(c.trunc.N, rule.n)
    values = c.tensor
    # contracting the leading axis each time rotates the node axes into place
    for _ in range(d):
        values = np.tensordot(values, H, axes=([0], [0]))
    return values


def _check_rule(trunc: HermiteTruncation, rule: QuadratureRule) -> None:
    if rule.n < 2 * trunc.N:
        raise DomainError(f"a {rule.n}-point rule is too coarse for degree {trunc.N}; need n >= {2 * trunc.N}")
    if rule.n < 4 * trunc.N:
        logger.warning("quadrature with n=%d nodes for degree %d is below the n >= 4N guidance", rule.n, trunc.N)


def _weighted_lp(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    a = np.abs(values)
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    return top * float(np.sum(weights * (a / top) ** p)) ** (1.0 / p)


def _tensor_weights(rule: QuadratureRule, d: int) -> np.ndarray:
    out = np.ones((1,) * d)
    for axis in range(d):
        out = out * _axis_view(rule.weights, axis, d)
    return out


def quad_lp_norm(c: CoeffTensor, p: float, rule: QuadratureRule) -> float:
    """
    ||f||_{L^p(e^{-|x|^2} dx)} by tensor Gauss-Hermite quadrature

    Exact for p = 2 once n >= N + 1 (the integrand is a polynomial of degree
    2N); for other p it is an approximation whose quality is governed by n.
    """
    p = require_exponent(p, allow_inf=False)
    _check_rule(c.trunc, rule)
    return _weighted_lp(synthesize(c, rule), _tensor_weights(rule, c.trunc.d), p)


def hermite_lp_ratio_search(r: int, p: float, trunc: HermiteTruncation, rule: QuadratureRule,
                            restarts: int = 4, seed: int = DEFAULT_SEED, maxiter: int = 200) -> NormEstimate:
    """
    Lower bound for ||R_r||_{L^p -> L^p} on the truncation

    Maximises ||R_r f||_p / ||f||_p over real coefficient tensors from seeded
    random starts; start i uses default_rng(seed + i). The best tensor is the
    witness and the reported lower bound is recomputed from it.
    """
    require_axis(r, trunc.d)
    p = require_exponent(p, allow_inf=False)
    require_int_at_least("restarts", restarts, 1)
    _check_rule(trunc, rule)
    weights = _tensor_weights(rule, trunc.d)

    def quotient(x: np.ndarray) -> float:
        c = CoeffTensor(x, trunc)
        denominator = _weighted_lp(synthesize(c, rule), weights, p)
        if denominator == 0.0:
            return 0.0
        return _weighted_lp(synthesize(apply_riesz_hermite(r, c), rule), weights, p) / denominator

    best_x, best_value, best_success, total = None, -1.0, False, 0
    for i in range(restarts):
        x0 = np.random.default_rng(seed + i).standard_normal(trunc.size)
        result = minimize(lambda x: -quotient(x), x0, method="L-BFGS-B", options={"maxiter": maxiter})
        total += int(result.nit)
        value = quotient(result.x)
        if value > best_value:
            best_x, best_value, best_success = np.array(result.x), value, bool(result.success)

    if not best_success:
        logger.warning("ratio search for R_%d at p=%s stopped before converging", r, p)
    return NormEstimate(p, best_value, None, "quad-search", best_x, total, best_success)


def hermite_ratio(r: int, p: float, witness: np.ndarray, trunc: HermiteTruncation, rule: QuadratureRule) -> float:
    """Re-derive ||R_r f||_p / ||f||_p from stored coefficients"""
    c = CoeffTensor(witness, trunc)
    return quad_lp_norm(apply_riesz_hermite(r, c), p, rule) / quad_lp_norm(c, p, rule)
