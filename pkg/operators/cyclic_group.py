"""
Random-walk Laplacians and Riesz transforms on products of cyclic groups.

Everything on (Z_K)^d is diagonalised by the d-dimensional DFT. With the numpy
convention F f(xi) = sum_x f(x) e^{-2 pi i x xi / K}, a shift f(x + g) has symbol
e^{2 pi i g xi / K}, convolution with a symmetric measure mu has the real symbol
sum_y mu(y) cos(2 pi xi y / K), and L = I - P has eigenvalues
lambda(xi) = 2 sum_y mu(y) sin^2(pi xi y / K).
"""
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy.sparse.linalg import LinearOperator

from operators.cache_utils import cache_data
from operators.exceptions import DomainError, ShapeMismatchError
from operators.pnorm import as_operator
from operators.spectral_core import ProductSpectrum, factor_multiplier, kernel_dimension, multiplier_values
from utils.validators import (
    DEFAULT_MEM_CAP,
    check_budget,
    grid_points,
    require_axis,
    require_int_at_least,
    require_non_negative,
    require_positive,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CyclicProductGroup:
    """(Z_K)^d with a cap on the number of grid points"""
    K: int
    d: int
    mem_cap: int = DEFAULT_MEM_CAP

    def __post_init__(self):
        require_int_at_least("K", self.K, 2)
        require_int_at_least("d", self.d, 1)
        check_budget(grid_points(self.K, self.d), self.mem_cap, what=f"(Z_{self.K})^{self.d}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.K,) * self.d

    @property
    def size(self) -> int:
        return self.K ** self.d


@dataclass(frozen=True)
class SymmetricMeasure:
    """A symmetric probability measure on Z_K whose support generates the group"""
    K: int
    weights: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        require_int_at_least("K", self.K, 2)
        merged: Dict[int, float] = {}
        for y, w in self.weights:
            if not (math.isfinite(w) and w >= 0):
                raise DomainError(f"measure weight at {y} must be non-negative, got {w}")
            merged[int(y) % self.K] = merged.get(int(y) % self.K, 0.0) + float(w)
        merged = {y: w for y, w in merged.items() if w > 0}
        object.__setattr__(self, "weights", tuple(sorted(merged.items())))

        total = math.fsum(merged.values())
        if abs(total - 1.0) > 1e-15 * max(1, len(merged)):
            raise DomainError(f"measure weights sum to {total!r}, not 1")
        for y, w in merged.items():
            if abs(merged.get((-y) % self.K, 0.0) - w) > 1e-15:
                raise DomainError(f"measure is not symmetric at {y}")
        if math.gcd(self.K, *merged.keys()) != 1:
            raise DomainError(f"support {sorted(merged)} does not generate Z_{self.K}")

    @classmethod
    def from_weights(cls, weights: Mapping[int, float], K: int) -> "SymmetricMeasure":
        return cls(K, tuple(weights.items()))

    @classmethod
    def mu_g0(cls, g0: int, K: int) -> "SymmetricMeasure":
        """(delta_{g0} + delta_{-g0}) / 2"""
        return cls(K, ((g0, 0.5), (-g0, 0.5)))

    @classmethod
    def lazy(cls, K: int) -> "SymmetricMeasure":
        """(delta_0 + delta_1 + delta_{-1}) / 3"""
        third = 1.0 / 3.0
        return cls(K, ((0, third), (1, third), (-1, third)))

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(y for y, _ in self.weights)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.K)
        for y, w in self.weights:
            out[y] = w
        return out


@dataclass(frozen=True)
class GridFunction:
    """A complex function on (Z_K)^d stored row-major"""
    values: np.ndarray
    group: CyclicProductGroup

    def __post_init__(self):
        values = np.array(self.values, dtype=complex).ravel()
        if values.size != self.group.size:
            raise ShapeMismatchError(
                f"grid function has {values.size} values, (Z_{self.group.K})^{self.group.d} has {self.group.size}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.group.shape)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray, group: CyclicProductGroup) -> "GridFunction":
        if tuple(np.shape(tensor)) != group.shape:
            raise ShapeMismatchError(f"tensor shape {np.shape(tensor)} is not {group.shape}")
        return cls(np.asarray(tensor).ravel(), group)

    @classmethod
    def constant(cls, group: CyclicProductGroup, value: complex = 1.0) -> "GridFunction":
        return cls(np.full(group.size, value, dtype=complex), group)

    @classmethod
    def basis(cls, group: CyclicProductGroup, index: int) -> "GridFunction":
        values = np.zeros(group.size, dtype=complex)
        values[index] = 1.0
        return cls(values, group)

    @classmethod
    def random(cls, group: CyclicProductGroup, rng: np.random.Generator, complex_values: bool = True) -> "GridFunction":
        values = rng.standard_normal(group.size)
        if complex_values:
            values = values + 1j * rng.standard_normal(group.size)
        return cls(values, group)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values + other.values, self.group)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values - other.values, self.group)

    def scaled(self, factor: complex) -> "GridFunction":
        return GridFunction(self.values * factor, self.group)


class WalkSpectrum(NamedTuple):
    symbol: np.ndarray
    laplacian: np.ndarray


@cache_data
def _walk_arrays(K: int, weights: Tuple[Tuple[int, float], ...]) -> Tuple[np.ndarray, np.ndarray]:
    xi = np.arange(K)
    lam = np.zeros(K)
    for y, w in weights:
        # reduce xi*y mod K first so the sine argument stays in [0, pi)
        lam += 2.0 * w * np.sin(np.pi * ((xi * y) % K) / K) ** 2
    lam[0] = 0.0
    symbol = 1.0 - lam
    symbol[0] = 1.0
    return symbol, lam


def walk_symbol(mu: SymmetricMeasure, K: Optional[int] = None) -> WalkSpectrum:
    """Eigenvalues of P_mu and of L = I - P_mu, indexed by the frequency xi in Z_K"""
    if K is not None and K != mu.K:
        raise DomainError(f"measure lives on Z_{mu.K}, not Z_{K}")
    symbol, lam = _walk_arrays(mu.K, mu.weights)
    return WalkSpectrum(symbol, lam)


@cache_data
def _shift_symbol(K: int, g0: int) -> np.ndarray:
    """e^{2 pi i g0 xi / K} - 1"""
    xi = np.arange(K)
    return np.exp(2j * np.pi * ((g0 * xi) % K) / K) - 1.0


def _axis_view(symbol: np.ndarray, axis: int, d: int) -> np.ndarray:
    shape = [1] * d
    shape[axis] = symbol.size
    return symbol.reshape(shape)


def _apply_axis(tensor: np.ndarray, symbol: np.ndarray, axis: int) -> np.ndarray:
    spectrum = sp_fft.fft(tensor, axis=axis)
    return sp_fft.ifft(spectrum * _axis_view(symbol, axis, tensor.ndim), axis=axis)


def _apply_joint(tensor: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    return sp_fft.ifftn(sp_fft.fftn(tensor) * multiplier)


def apply_Pi0(f: GridFunction) -> GridFunction:
    """Subtract the global mean"""
    return GridFunction(f.values - f.values.mean(), f.group)


def apply_Pi0r(f: GridFunction, r: int) -> GridFunction:
    """Subtract the mean along axis r"""
    require_axis(r, f.group.d)
    tensor = f.tensor
    return GridFunction.from_tensor(tensor - tensor.mean(axis=r - 1, keepdims=True), f.group)


def apply_partial(g0: int, f: GridFunction, r: int) -> GridFunction:
    """Direct difference along axis r: f(x + g0 e_r) - f(x)"""
    require_axis(r, f.group.d)
    tensor = f.tensor
    return GridFunction.from_tensor(np.roll(tensor, -g0, axis=r - 1) - tensor, f.group)


def apply_partial_adjoint(g0: int, f: GridFunction, r: int) -> GridFunction:
    """f(x - g0 e_r) - f(x)"""
    require_axis(r, f.group.d)
    tensor = f.tensor
    return GridFunction.from_tensor(np.roll(tensor, g0, axis=r - 1) - tensor, f.group)


class DDStarCheck(NamedTuple):
    deviation: float
    measure_matches: bool
    normalisation_deviation: float


class CyclicRieszSystem:
    """
    The product system L_r = I - P_r on (Z_K)^d for a fixed measure mu and shift g0

    Every operator is available through an FFT multiplier; P, the difference
    operator and the heat semigroup also have direct (shift based) paths so
    each can serve as the other's oracle.
    """

    def __init__(self, group: CyclicProductGroup, measure: Optional[SymmetricMeasure] = None, g0: int = 1):
        if measure is None:
            measure = SymmetricMeasure.mu_g0(g0, group.K)
        if measure.K != group.K:
            raise DomainError(f"measure lives on Z_{measure.K}, group is built on Z_{group.K}")
        self.group = group
        self.measure = measure
        self.g0 = int(g0) % group.K
        self.spectrum = walk_symbol(measure)
        logger.debug("cyclic system K=%d d=%d support=%s g0=%d", group.K, group.d, measure.support, self.g0)

    @property
    def K(self) -> int:
        return self.group.K

    @property
    def d(self) -> int:
        return self.group.d

    def product_spectrum(self) -> ProductSpectrum:
        return ProductSpectrum((self.spectrum.laplacian,) * self.d)

    def kernel_dimension(self, atol: float = 1e-14) -> int:
        """Joint tuples with sum_r lambda(xi_r) below atol; 1 when the support generates"""
        return kernel_dimension(self.product_spectrum(), atol)

    def _check(self, f: GridFunction) -> None:
        if f.group.K != self.K or f.group.d != self.d:
            raise ShapeMismatchError(f"function on (Z_{f.group.K})^{f.group.d}, system on (Z_{self.K})^{self.d}")

    # -- random walk, differences, heat -------------------------------------------------

    def apply_P(self, f: GridFunction, r: int, method: str = "fft") -> GridFunction:
        """Convolution with mu along axis r"""
        self._check(f)
        require_axis(r, self.d)
        if method == "direct":
            tensor = f.tensor
            out = sum(w * np.roll(tensor, -y, axis=r - 1) for y, w in self.measure.weights)
            return GridFunction.from_tensor(out, self.group)
        if method != "fft":
            raise DomainError(f"unknown method {method!r}")
        return GridFunction.from_tensor(_apply_axis(f.tensor, self.spectrum.symbol, r - 1), self.group)

    def apply_partial(self, f: GridFunction, r: int, method: str = "direct") -> GridFunction:
        self._check(f)
        if method == "direct":
            return apply_partial(self.g0, f, r)
        require_axis(r, self.d)
        return GridFunction.from_tensor(_apply_axis(f.tensor, _shift_symbol(self.K, self.g0), r - 1), self.group)

    def apply_partial_adjoint(self, f: GridFunction, r: int) -> GridFunction:
        self._check(f)
        return apply_partial_adjoint(self.g0, f, r)

    def _heat_axes(self, axes: Optional[Iterable[int]]) -> Tuple[int, ...]:
        axes = tuple(range(1, self.d + 1)) if axes is None else tuple(axes)
        for r in axes:
            require_axis(r, self.d)
        return axes

    def heat(self, t: float, f: GridFunction, axes: Optional[Iterable[int]] = None) -> GridFunction:
        """e^{-t L_r} for every r in axes (all axes by default), applied spectrally"""
        require_non_negative("t", t)
        self._check(f)
        tensor = f.tensor
        factor = np.exp(-t * self.spectrum.laplacian)
        for r in self._heat_axes(axes):
            tensor = _apply_axis(tensor, factor, r - 1)
        return GridFunction.from_tensor(tensor, self.group)

    def heat_series(self, t: float, f: GridFunction, axes: Optional[Iterable[int]] = None,
                    n_terms: int = 60) -> GridFunction:
        """e^{-t} sum_{n <= n_terms} t^n P_r^n / n! per axis, using the direct convolution"""
        require_non_negative("t", t)
        self._check(f)
        for r in self._heat_axes(axes):
            term = f
            acc = f.values.copy()
            for n in range(1, n_terms + 1):
                term = self.apply_P(term, r, method="direct").scaled(t / n)
                acc += term.values
            f = GridFunction(math.exp(-t) * acc, self.group)
        return f

    # -- multipliers ------------------------------------------------------------------

    def riesz_multiplier(self, r: int) -> np.ndarray:
        require_axis(r, self.d)
        return _riesz_array(self.K, self.d, self.measure.weights, self.g0, r)

    def one_dim_multiplier(self, r: int) -> np.ndarray:
        require_axis(r, self.d)
        return _axis_view(_one_dim_array(self.K, self.measure.weights, self.g0), r - 1, self.d)

    def ddstar_multiplier(self, r: int) -> np.ndarray:
        require_axis(r, self.d)
        return _ddstar_riesz_array(self.K, self.d, self.g0, r)

    def joint_factor_multiplier(self, r: int, sigma: float, epsilon: float = 0.0) -> np.ndarray:
        require_axis(r, self.d)
        require_positive("sigma", sigma)
        require_non_negative("epsilon", epsilon)
        return _joint_factor_array(self.K, self.d, self.measure.weights, r, float(sigma), float(epsilon))

    def multiplier(self, kind: str, r: int = 1, sigma: float = 0.5, epsilon: float = 0.0,
                   t: float = 1.0) -> np.ndarray:
        """Multiplier array (broadcastable to the grid) of any operator of the system"""
        if kind == "riesz":
            return self.riesz_multiplier(r)
        if kind == "one-dim-riesz":
            return self.one_dim_multiplier(r)
        if kind == "joint-factor":
            return self.joint_factor_multiplier(r, sigma, epsilon)
        if kind == "riesz-ddstar":
            return self.ddstar_multiplier(r)
        if kind == "heat":
            factor = np.exp(-t * self.spectrum.laplacian)
            return reduce(np.multiply, [_axis_view(factor, s, self.d) for s in range(self.d)])
        if kind == "P":
            require_axis(r, self.d)
            return _axis_view(self.spectrum.symbol, r - 1, self.d)
        if kind == "partial":
            require_axis(r, self.d)
            return _axis_view(_shift_symbol(self.K, self.g0), r - 1, self.d)
        raise DomainError(f"unknown operator kind {kind!r}")

    # -- Riesz transforms and the factorisation pieces ------------------------------------

    def riesz(self, r: int, f: GridFunction) -> GridFunction:
        """(partial_{g0} ⊗ I_(r)) (L_1 + ... + L_d)^{-1/2} Pi_0"""
        self._check(f)
        return GridFunction.from_tensor(_apply_joint(f.tensor, self.riesz_multiplier(r)), self.group)

    def one_dim_riesz_tensor(self, r: int, f: GridFunction) -> GridFunction:
        """R ⊗ I_(r): the one-dimensional Riesz transform acting along axis r"""
        self._check(f)
        require_axis(r, self.d)
        symbol = _one_dim_array(self.K, self.measure.weights, self.g0)
        return GridFunction.from_tensor(_apply_axis(f.tensor, symbol, r - 1), self.group)

    def joint_factor(self, r: int, sigma: float, epsilon: float, f: GridFunction) -> GridFunction:
        """(L_r + eps)^sigma (L_1 + ... + L_d + d eps)^{-sigma} Pi_{0,r}"""
        self._check(f)
        require_axis(r, self.d)
        require_positive("sigma", sigma)
        require_non_negative("epsilon", epsilon)
        multiplier = self.joint_factor_multiplier(r, sigma, epsilon)
        return GridFunction.from_tensor(_apply_joint(f.tensor, multiplier), self.group)

    def factored_riesz(self, r: int, f: GridFunction) -> GridFunction:
        """(R ⊗ I_(r)) (L_r^{1/2} (L_1 + ... + L_d)^{-1/2} Pi_{0,r}) f"""
        return self.one_dim_riesz_tensor(r, self.joint_factor(r, 0.5, 0.0, f))

    def riesz_ddstar_form(self, r: int, f: GridFunction) -> GridFunction:
        """partial_r (sum_s partial_s partial_s^*)^{-1/2} Pi_0"""
        self._check(f)
        return GridFunction.from_tensor(_apply_joint(f.tensor, self.ddstar_multiplier(r)), self.group)

    def square_function(self, f: GridFunction) -> GridFunction:
        """(sum_r |R_r f|^2)^{1/2} pointwise"""
        self._check(f)
        acc = np.zeros(self.group.size)
        for r in range(1, self.d + 1):
            acc += np.abs(self.riesz(r, f).values) ** 2
        return GridFunction(np.sqrt(acc), self.group)

    def riesz_norm2(self, r: int) -> Tuple[float, np.ndarray]:
        """
        Exact l^2 operator norm of R_r and a plane wave attaining it

        R_r is a Fourier multiplier, so its l^2 norm is the sup of the modulus of
        the multiplier; the plane wave at the first argmax is an eigenvector.
        """
        modulus = np.abs(np.broadcast_to(self.riesz_multiplier(r), self.group.shape))
        flat = int(np.argmax(modulus))
        xi = np.unravel_index(flat, self.group.shape)
        return float(modulus.ravel()[flat]), self.plane_wave(xi).values

    def plane_wave(self, xi: Sequence[int]) -> GridFunction:
        grids = np.ix_(*[np.arange(self.K)] * self.d)
        phase = sum(int(k) * x for k, x in zip(xi, grids))
        return GridFunction.from_tensor(np.exp(2j * np.pi * (phase % self.K) / self.K), self.group)

    # -- identities -------------------------------------------------------------------

    def double_difference_check(self, rng: Optional[np.random.Generator] = None,
                                max_basis: int = 4096, samples: int = 64) -> DDStarCheck:
        """
        max ||partial partial^* f - 2 (I - P) f||_inf over basis vectors (or a random sample)

        The identity needs mu = mu_{g0}; for any other measure the deviation is
        reported together with measure_matches = False.
        """
        if self.group.size <= max_basis:
            probes = (GridFunction.basis(self.group, i) for i in range(self.group.size))
        else:
            rng = rng if rng is not None else np.random.default_rng(0)
            probes = (GridFunction.random(self.group, rng) for _ in range(samples))

        deviation, normalisation = 0.0, 0.0
        for f in probes:
            for r in range(1, self.d + 1):
                lhs = apply_partial(self.g0, apply_partial_adjoint(self.g0, f, r), r)
                rhs = (f - self.apply_P(f, r, method="direct")).scaled(2.0)
                deviation = max(deviation, float(np.max(np.abs(lhs.values - rhs.values))))
                gap = self.riesz(r, f).values - math.sqrt(2.0) * self.riesz_ddstar_form(r, f).values
                normalisation = max(normalisation, float(np.max(np.abs(gap))))

        matches = self.measure == SymmetricMeasure.mu_g0(self.g0, self.K)
        if not matches:
            logger.info("measure %s differs from mu_g0; the identity is not expected to hold", self.measure.support)
        return DDStarCheck(deviation, matches, normalisation)

    # -- pnorm bridge -----------------------------------------------------------------

    def as_operator(self, kind: str, **params) -> LinearOperator:
        """Wrap an FFT multiplier as a LinearOperator on row-major vectors, adjoint included"""
        multiplier = np.broadcast_to(self.multiplier(kind, **params), self.group.shape)
        conjugate = np.conj(multiplier)
        shape = self.group.shape

        def matvec(x):
            return _apply_joint(np.asarray(x, dtype=complex).reshape(shape), multiplier).ravel()

        def rmatvec(y):
            return _apply_joint(np.asarray(y, dtype=complex).reshape(shape), conjugate).ravel()

        return as_operator(matvec, rmatvec, self.group.size)


@cache_data
def _one_dim_array(K: int, weights: Tuple[Tuple[int, float], ...], g0: int) -> np.ndarray:
    lam = _walk_arrays(K, weights)[1]
    numerator = _shift_symbol(K, g0)
    out = np.zeros(K, dtype=complex)
    positive = lam > 0
    out[positive] = numerator[positive] / np.sqrt(lam[positive])
    return out


@cache_data
def _riesz_array(K: int, d: int, weights: Tuple[Tuple[int, float], ...], g0: int, r: int) -> np.ndarray:
    lam = _walk_arrays(K, weights)[1]
    total = ProductSpectrum((lam,) * d).total()
    numerator = _axis_view(_shift_symbol(K, g0), r - 1, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = numerator / np.sqrt(total)
    return np.where(total > 0, out, 0.0)


@cache_data
def _ddstar_riesz_array(K: int, d: int, g0: int, r: int) -> np.ndarray:
    shift = _shift_symbol(K, g0)
    energy = ProductSpectrum((np.abs(shift) ** 2,) * d).total()
    numerator = _axis_view(shift, r - 1, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = numerator / np.sqrt(energy)
    return np.where(energy > 0, out, 0.0)


@cache_data
def _joint_factor_array(K: int, d: int, weights: Tuple[Tuple[int, float], ...], r: int,
                        sigma: float, epsilon: float) -> np.ndarray:
    lam = _walk_arrays(K, weights)[1]
    return multiplier_values(factor_multiplier(r, sigma, epsilon), ProductSpectrum((lam,) * d))
