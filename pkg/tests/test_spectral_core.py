import math

import numpy as np
import pytest

from operators.exceptions import DomainError, ShapeMismatchError
from operators.spectral_core import (
    JointMultiplier,
    ProductSpectrum,
    SectorSpec,
    apply_diagonal,
    constant_multiplier,
    eval_m_sigma,
    factor_multiplier,
    heat_multiplier,
    kernel_dimension,
    m_sigma_array,
    multiplier_values,
    p_star,
    sector_sup,
)

# sampled sup of |m_{1/2}| on the default 64 x 32 grid
QUARTER_SECTOR_HALF = 1.0
THIRD_SECTOR_HALF = 1.071694


class TestMSigma:
    def test_positive_reals(self):
        assert eval_m_sigma(1.0, 1.0, 0.5) == pytest.approx(1 / math.sqrt(2), rel=1e-15)

    def test_zero_first_argument(self):
        assert eval_m_sigma(0.0, 2.0, 0.7) == 0

    def test_zero_second_argument(self):
        assert eval_m_sigma(2.0, 0.0, 0.3) == pytest.approx(1.0, rel=1e-15)

    def test_homogeneous(self):
        z1, z2 = 1 + 2j, 3 - 1j
        assert eval_m_sigma(z1, z2, 0.4) == pytest.approx(eval_m_sigma(5 * z1, 5 * z2, 0.4), rel=1e-14)

    def test_exponents_add(self, rng):
        theta = rng.uniform(-0.7, 0.7, size=(2, 50))
        radius = np.exp(rng.uniform(-5, 5, size=(2, 50)))
        z1, z2 = radius * np.exp(1j * theta)
        product = m_sigma_array(z1, z2, 0.3) * m_sigma_array(z1, z2, 1.2)
        np.testing.assert_allclose(product, m_sigma_array(z1, z2, 1.5), rtol=1e-12)

    @pytest.mark.parametrize("sigma", [0.25, 1.0, 3.0])
    def test_modulus_bounded_on_positive_reals(self, rng, sigma):
        lam1 = np.exp(rng.uniform(-8, 8, 200))
        lam2 = np.concatenate([[0.0], np.exp(rng.uniform(-8, 8, 199))])
        modulus = np.abs(m_sigma_array(lam1, lam2, sigma))
        assert np.all(modulus > 0)
        assert np.all(modulus <= 1.0 + 1e-15)

    def test_singular_sum(self):
        with pytest.raises(DomainError):
            eval_m_sigma(1j, -1j, 0.5)

    def test_left_half_plane(self):
        with pytest.raises(DomainError):
            eval_m_sigma(-1.0, 2.0, 0.5)

    @pytest.mark.parametrize("sigma", [0, -0.5])
    def test_sigma_must_be_positive(self, sigma):
        with pytest.raises(DomainError):
            eval_m_sigma(1.0, 1.0, sigma)


class TestProductSpectrum:
    def test_total(self):
        spectrum = ProductSpectrum(([0.0, 1.0], [0.0, 2.0, 4.0]))
        assert spectrum.shape == (2, 3)
        np.testing.assert_array_equal(spectrum.total(), [[0, 2, 4], [1, 3, 5]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(DomainError):
            ProductSpectrum(([0.0, -1.0],))

    def test_kernel_dimension(self):
        assert kernel_dimension(ProductSpectrum(([0.0, 1.0], [0.0, 1.0]))) == 1
        assert kernel_dimension(ProductSpectrum(([0.0, 0.0, 1.0], [0.0, 1.0]))) == 2


class TestMultipliers:
    def test_zero_policy_only_at_origin(self):
        spectrum = ProductSpectrum(([0.0, 1.0], [0.0, 3.0]))
        inverse = JointMultiplier(lambda a, b: 1.0 / (a + b), zero_policy=7.0)
        values = multiplier_values(inverse, spectrum)
        assert values[0, 0] == 7.0
        assert values[1, 1] == pytest.approx(0.25)

    def test_finite_value_at_origin_is_kept(self):
        spectrum = ProductSpectrum(([0.0, 1.0],))
        values = multiplier_values(constant_multiplier(1.0, zero_policy=5.0), spectrum)
        np.testing.assert_array_equal(values, [1.0, 1.0])

    def test_heat_diagonal(self):
        spectrum = ProductSpectrum(([0.0, 2.0, 4.0], [0.0, 2.0]))
        coeffs = np.ones(spectrum.shape)
        out = apply_diagonal(heat_multiplier(0.5), spectrum, coeffs)
        assert out[2, 1] == pytest.approx(math.exp(-3.0), rel=1e-15)
        assert out[0, 0] == 1.0

    def test_applications_compose(self, rng):
        spectrum = ProductSpectrum(([0.0, 1.0, 2.0, 1.0], [0.0, 1.0, 2.0, 1.0]))
        coeffs = rng.standard_normal(spectrum.shape) + 1j * rng.standard_normal(spectrum.shape)
        heat, factor = heat_multiplier(0.7), factor_multiplier(2, 0.5)
        both = JointMultiplier(lambda *lam: heat.eval(*lam) * factor.eval(*lam))
        twice = apply_diagonal(factor, spectrum, apply_diagonal(heat, spectrum, coeffs))
        np.testing.assert_allclose(twice, apply_diagonal(both, spectrum, coeffs), rtol=1e-14, atol=1e-300)

    def test_walk_spectrum_example(self):
        spectrum = ProductSpectrum(([0.0, 1.0, 2.0, 1.0], [0.0, 1.0, 2.0, 1.0]))
        coeffs = np.zeros(spectrum.shape)
        coeffs[2, 2] = 1.0
        half = JointMultiplier(lambda a, b: m_sigma_array(a, b, 0.5))
        assert apply_diagonal(half, spectrum, coeffs)[2, 2] == pytest.approx(2 ** -0.5, rel=1e-15)

    def test_flat_input_keeps_shape(self):
        spectrum = ProductSpectrum(([0.0, 2.0], [0.0, 2.0]))
        out = apply_diagonal(heat_multiplier(1.0), spectrum, np.ones(4))
        assert out.shape == (4,)

    def test_shape_mismatch(self):
        spectrum = ProductSpectrum(([0.0, 2.0], [0.0, 2.0]))
        with pytest.raises(ShapeMismatchError):
            apply_diagonal(heat_multiplier(1.0), spectrum, np.ones(5))

    @pytest.mark.parametrize("epsilon", [0.0, 0.01, 1.0])
    def test_factor_is_m_sigma_of_shifted_pair(self, epsilon):
        spectrum = ProductSpectrum(([0.0, 0.5, 2.0], [0.0, 1.0], [0.0, 3.0]))
        values = multiplier_values(factor_multiplier(1, 0.5, epsilon), spectrum)
        lam = spectrum.coordinates()
        for index in np.ndindex(spectrum.shape):
            l1, l2, l3 = (float(np.broadcast_to(l, spectrum.shape)[index]) for l in lam)
            expected = eval_m_sigma(l1 + epsilon, l2 + l3 + 2 * epsilon, 0.5) if l1 > 0 else 0.0
            assert values[index] == pytest.approx(expected, rel=1e-14, abs=1e-300)

    def test_factor_vanishes_on_axis_kernel(self):
        spectrum = ProductSpectrum(([0.0, 1.0], [0.0, 1.0]))
        values = multiplier_values(factor_multiplier(1, 0.5), spectrum)
        assert values[0, 1] == 0
        assert values[0, 0] == 0


class TestSector:
    @pytest.mark.parametrize("sigma", [0.5, 1.0])
    def test_quarter_angle_supremum_is_one(self, sigma):
        result = sector_sup(sigma, SectorSpec((math.pi / 4, math.pi / 4)))
        assert result.value == pytest.approx(1.0, abs=1e-9)
        assert result.value <= 1.0 + 1e-12

    def test_wider_sector_is_larger(self):
        narrow = sector_sup(1.0, SectorSpec((math.pi / 4, math.pi / 4))).value
        wide = sector_sup(1.0, SectorSpec((math.pi / 3, math.pi / 3))).value
        assert wide > narrow

    def test_larger_exponent_on_quarter_sector(self):
        spec = SectorSpec((math.pi / 4, math.pi / 4))
        half = sector_sup(0.5, spec).value
        assert half == pytest.approx(QUARTER_SECTOR_HALF, abs=1e-12)
        assert sector_sup(2.0, spec).value >= half - 1e-12

    def test_third_sector_regression(self):
        # |m_sigma| = |m_1|^sigma, and sup |m_1| over S_{pi/3} is 2/sqrt(3)
        spec = SectorSpec((math.pi / 3, math.pi / 3))
        half = sector_sup(0.5, spec).value
        assert half == pytest.approx(THIRD_SECTOR_HALF, rel=1e-5)
        assert half <= (2 / math.sqrt(3)) ** 0.5
        assert sector_sup(2.0, spec).value == pytest.approx(half ** 4, rel=1e-12)

    def test_witness_points_attain_value(self):
        result = sector_sup(1.0, SectorSpec((math.pi / 3, math.pi / 3)))
        assert abs(eval_m_sigma(result.z1, result.z2, 1.0)) == pytest.approx(result.value, rel=1e-12)

    @pytest.mark.parametrize("angles", [(0.0, 1.0), (1.0, 2.0)])
    def test_rejects_angles(self, angles):
        with pytest.raises(DomainError):
            sector_sup(0.5, SectorSpec(angles))


class TestPStar:
    def test_conjugate_exponents_agree(self):
        assert p_star(4.0) == pytest.approx(math.pi / 6, rel=1e-15)
        assert p_star(4.0 / 3.0) == pytest.approx(math.pi / 6, rel=1e-14)

    def test_zero_at_two(self):
        assert p_star(2.0) == 0.0

    @pytest.mark.parametrize("p", [1.0, math.inf])
    def test_endpoints_rejected(self, p):
        with pytest.raises(DomainError):
            p_star(p)
