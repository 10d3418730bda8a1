"""
Joint spectral multipliers on product systems.

A product system L = (L_1, ..., L_d) whose joint spectrum is the Cartesian
product of per-axis eigenvalue lists is fully described by ProductSpectrum.
A JointMultiplier m acts on coefficient data indexed by that product through
m(L) c [idx] = m(lambda(idx)) * c[idx].
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Tuple

import numpy as np

from operators.exceptions import DomainError, ShapeMismatchError
from utils.validators import require_exponent, require_int_at_least, require_positive

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductSpectrum:
    """Per-axis eigenvalue arrays; the joint spectrum is their Cartesian product"""
    axes: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.axes) < 1:
            raise DomainError("a product spectrum needs at least one axis")
        frozen = []
        for i, axis in enumerate(self.axes):
            arr = np.array(axis, dtype=float).ravel()
            if arr.size == 0:
                raise DomainError(f"axis {i + 1} has no eigenvalues")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DomainError(f"axis {i + 1} has a negative or non-finite eigenvalue")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "axes", tuple(frozen))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.size for axis in self.axes)

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """lambda_r as arrays broadcastable against the full grid"""
        return tuple(np.ix_(*self.axes))

    def total(self) -> np.ndarray:
        """lambda_1 + ... + lambda_d on the full grid"""
        out = np.zeros(self.shape)
        for lam in self.coordinates():
            out = out + lam
        return out


@dataclass(frozen=True)
class JointMultiplier:
    """
    A function m on [0, inf)^d and the value it takes where its formula breaks down.

    `eval` receives lambda_1, ..., lambda_d as broadcastable arrays. zero_policy
    replaces the formula at joint tuples with lambda_1 + ... + lambda_d = 0 where
    the formula evaluates to a non-finite number.
    """
    eval: Callable[..., np.ndarray]
    zero_policy: complex = 0.0
    name: str = field(default="m", compare=False)


class SectorSpec(NamedTuple):
    angles: Tuple[float, float]
    r_min: float = 1e-6
    r_max: float = 1e6
    n_angular: int = 64
    n_radial: int = 32

    def validate(self) -> "SectorSpec":
        if len(self.angles) != 2:
            raise DomainError("a polysector is given by exactly two angles")
        for phi in self.angles:
            if not (0 < phi <= math.pi / 2):
                raise DomainError(f"sector angle must lie in (0, pi/2], got {phi}")
        require_positive("r_min", self.r_min)
        if not self.r_min < self.r_max:
            raise DomainError("r_min must be smaller than r_max")
        require_int_at_least("n_angular", self.n_angular, 2)
        require_int_at_least("n_radial", self.n_radial, 2)
        return self


class SectorSup(NamedTuple):
    value: float
    z1: complex
    z2: complex


def m_sigma_array(z1, z2, sigma: float) -> np.ndarray:
    """
    Vectorised z1^sigma (z1 + z2)^(-sigma) on the principal branch.

    Entries with z1 = 0 are 0; entries with z1 != 0 and z1 + z2 = 0 come out
    non-finite and are left for the caller's zero policy.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    z1, z2 = np.broadcast_arrays(z1, z2)
    s = z1 + z2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(sigma * (np.log(z1) - np.log(s)))
    out = np.where(z1 == 0, 0.0, out)
    out = np.where((z1 != 0) & (s == 0), np.nan, out)
    return out


def eval_m_sigma(z1: complex, z2: complex, sigma: float) -> complex:
    """
    Evaluate m_sigma(z1, z2) = z1^sigma (z1 + z2)^(-sigma) with the principal branch

    Args:
        z1, z2: points of the closed right half-plane
        sigma: positive exponent

    Returns:
        The complex value; 0 when z1 = 0
    """
    if not (isinstance(sigma, (int, float)) and sigma > 0):
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    z1, z2 = complex(z1), complex(z2)
    if z1.real < 0 or z2.real < 0:
        raise DomainError("m_sigma is only defined on the closed right half-plane")
    if z1 == 0:
        return 0j
    if z1 + z2 == 0:
        raise DomainError("m_sigma is singular where z1 + z2 = 0")
    return complex(m_sigma_array(z1, z2, sigma))


def multiplier_values(mult: JointMultiplier, spectrum: ProductSpectrum) -> np.ndarray:
    """The multiplier on the whole joint spectrum grid, zero policy applied"""
    lam = spectrum.coordinates()
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        values = np.asarray(mult.eval(*lam), dtype=complex)
    values = np.array(np.broadcast_to(values, spectrum.shape), dtype=complex)
    singular = (spectrum.total() == 0) & ~np.isfinite(values)
    values[singular] = mult.zero_policy
    if not np.all(np.isfinite(values)):
        raise DomainError(f"multiplier {mult.name} is not finite away from the origin")
    return values


def apply_diagonal(mult: JointMultiplier, spectrum: ProductSpectrum, coeffs: np.ndarray) -> np.ndarray:
    """
    Apply m(L) to coefficients indexed by the joint spectrum

    Accepts either an array shaped like the spectrum grid or its row-major
    flattening; the output has the shape of the input.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape == spectrum.shape:
        return multiplier_values(mult, spectrum) * coeffs
    if coeffs.ndim == 1 and coeffs.size == int(np.prod(spectrum.shape)):
        return (multiplier_values(mult, spectrum) * coeffs.reshape(spectrum.shape)).ravel()
    raise ShapeMismatchError(
        f"coefficients of shape {coeffs.shape} do not match spectrum grid {spectrum.shape}"
    )


def kernel_dimension(spectrum: ProductSpectrum, atol: float = 1e-14) -> int:
    """Number of joint eigenvalue tuples with lambda_1 + ... + lambda_d below atol"""
    return int(np.count_nonzero(spectrum.total() < atol))


def sector_sup(sigma: float, spec: SectorSpec, block: int = 256) -> SectorSup:
    """
    Sample sup |m_sigma| over the polysector S_phi.

    Each coordinate runs over r e^{i theta} with r log-spaced in [r_min, r_max]
    and theta linearly spaced in [-phi_r, phi_r]. The scan is chunked over z1;
    ties keep the first grid point in row-major order.
    """
    require_positive("sigma", sigma)
    spec = spec.validate()

    radii = np.logspace(np.log10(spec.r_min), np.log10(spec.r_max), spec.n_radial)
    points = []
    for phi in spec.angles:
        theta = np.linspace(-phi, phi, spec.n_angular)
        points.append((radii[:, None] * np.exp(1j * theta[None, :])).ravel())
    z1_all, z2_all = points

    best_value, best_index = -np.inf, (0, 0)
    for start in range(0, z1_all.size, block):
        z1 = z1_all[start:start + block]
        modulus = np.abs(m_sigma_array(z1[:, None], z2_all[None, :], sigma))
        modulus = np.where(np.isfinite(modulus), modulus, np.inf)
        flat = int(np.argmax(modulus))
        value = float(modulus.ravel()[flat])
        if value > best_value:
            i, j = divmod(flat, z2_all.size)
            best_value, best_index = value, (start + i, j)

    i, j = best_index
    logger.debug("sector sup sigma=%s angles=%s -> %s", sigma, spec.angles, best_value)
    return SectorSup(best_value, complex(z1_all[i]), complex(z2_all[j]))


def p_star(p: float) -> float:
    """arcsin|2/p - 1|, the sector half-angle threshold for exponent p"""
    p = require_exponent(p, allow_one=False, allow_inf=False)
    return math.asin(abs(2.0 / p - 1.0))


def constant_multiplier(value: complex, zero_policy: complex = 0.0) -> JointMultiplier:
    return JointMultiplier(lambda *lam: np.full(np.broadcast_shapes(*[l.shape for l in lam]), value),
                           zero_policy=zero_policy, name=f"const({value})")


def heat_multiplier(t: float) -> JointMultiplier:
    return JointMultiplier(lambda *lam: np.exp(-t * sum(lam)), name=f"heat({t})")


def factor_multiplier(r: int, sigma: float, epsilon: float = 0.0) -> JointMultiplier:
    """
    (lambda_r + eps)^sigma (lambda_1 + ... + lambda_d + d eps)^(-sigma), times 1{lambda_r > 0}

    This is m_sigma(lambda_r + eps, sum_{s != r} lambda_s + (d - 1) eps).
    """
    def evaluate(*lam: np.ndarray) -> np.ndarray:
        dim = len(lam)
        lam_r = lam[r - 1]
        rest = sum(l for s, l in enumerate(lam) if s != r - 1) + (dim - 1) * epsilon
        values = m_sigma_array(lam_r + epsilon, rest, sigma)
        return np.where(lam_r > 0, values, 0.0)

    return JointMultiplier(evaluate, name=f"factor(r={r},sigma={sigma},eps={epsilon})")

