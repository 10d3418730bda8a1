import math

import numpy as np
import pytest

from operators.cyclic_group import (
    CyclicProductGroup,
    CyclicRieszSystem,
    GridFunction,
    SymmetricMeasure,
    _apply_joint,
    apply_Pi0,
    apply_Pi0r,
    walk_symbol,
)
from operators.exceptions import DomainError, MemoryBudgetError, ShapeMismatchError
from operators.pnorm import check_adjoint, lp_norm
from operators.spectral_core import eval_m_sigma
from tests.conftest import make_system


def _relative(a: GridFunction, b: GridFunction) -> float:
    return lp_norm(a.values - b.values, 2) / max(lp_norm(b.values, 2), 1e-300)


class TestMeasure:
    def test_walk_symbol_of_mu_g0(self):
        spectrum = walk_symbol(SymmetricMeasure.mu_g0(1, 4))
        np.testing.assert_allclose(spectrum.symbol, [1, 0, -1, 0], atol=1e-15)
        np.testing.assert_allclose(spectrum.laplacian, [0, 1, 2, 1], atol=1e-15)

    def test_walk_symbol_of_lazy_walk(self):
        spectrum = walk_symbol(SymmetricMeasure.lazy(3))
        np.testing.assert_allclose(spectrum.laplacian, [0, 1, 1], atol=1e-15)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            SymmetricMeasure.from_weights({1: 1.0}, 4)

    def test_rejects_bad_total(self):
        with pytest.raises(DomainError):
            SymmetricMeasure.from_weights({1: 0.3, 3: 0.3}, 4)

    def test_rejects_non_generating_support(self):
        with pytest.raises(DomainError):
            SymmetricMeasure.mu_g0(2, 4)

    def test_weights_merge_mod_K(self):
        measure = SymmetricMeasure.from_weights({1: 0.25, 5: 0.25, -1: 0.5}, 4)
        assert measure.support == (1, 3)


class TestGroup:
    def test_memory_cap(self):
        with pytest.raises(MemoryBudgetError):
            CyclicProductGroup(4, 20)

    def test_grid_function_size(self):
        with pytest.raises(ShapeMismatchError):
            GridFunction(np.zeros(5), CyclicProductGroup(4, 1))

    def test_system_rejects_foreign_function(self, system_8x2):
        with pytest.raises(ShapeMismatchError):
            system_8x2.riesz(1, GridFunction.constant(CyclicProductGroup(4, 2)))

    def test_axis_range(self, system_8x2, rng):
        with pytest.raises(DomainError):
            system_8x2.riesz(3, GridFunction.random(system_8x2.group, rng))


class TestConvolutions:
    def test_fft_matches_direct_P(self, system_4x3, rng):
        f = GridFunction.random(system_4x3.group, rng)
        for r in (1, 2, 3):
            assert _relative(system_4x3.apply_P(f, r), system_4x3.apply_P(f, r, method="direct")) <= 1e-12

    def test_fft_matches_direct_partial(self, rng):
        system = make_system(8, 2, g0=3)
        f = GridFunction.random(system.group, rng)
        for r in (1, 2):
            assert _relative(system.apply_partial(f, r, method="fft"), system.apply_partial(f, r)) <= 1e-12

    def test_partial_adjoint(self, system_8x2, rng):
        f = GridFunction.random(system_8x2.group, rng)
        g = GridFunction.random(system_8x2.group, rng)
        lhs = np.vdot(g.values, system_8x2.apply_partial(f, 1).values)
        rhs = np.vdot(system_8x2.apply_partial_adjoint(g, 1).values, f.values)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_projections(self, system_4x3, rng):
        constant = GridFunction.constant(system_4x3.group, 2.5)
        assert lp_norm(apply_Pi0(constant).values, math.inf) <= 1e-15
        f = GridFunction.random(system_4x3.group, rng)
        projected = apply_Pi0r(f, 2)
        assert np.max(np.abs(projected.tensor.mean(axis=1))) <= 1e-14
        assert _relative(apply_Pi0r(projected, 2), projected) <= 1e-14


    def test_projections_are_self_adjoint(self, system_4x3, rng):
        f = GridFunction.random(system_4x3.group, rng)
        g = GridFunction.random(system_4x3.group, rng)
        assert np.vdot(g.values, apply_Pi0(f).values) == pytest.approx(np.vdot(apply_Pi0(g).values, f.values), rel=1e-13)
        for r in (1, 2, 3):
            lhs = np.vdot(g.values, apply_Pi0r(f, r).values)
            assert lhs == pytest.approx(np.vdot(apply_Pi0r(g, r).values, f.values), rel=1e-13)

    def test_axis_projection_after_global_projection(self, system_4x3, rng):
        f = GridFunction.random(system_4x3.group, rng)
        assert abs(apply_Pi0(f).values.mean()) <= 1e-15
        for r in (1, 2, 3):
            assert _relative(apply_Pi0r(apply_Pi0(f), r), apply_Pi0r(f, r)) <= 1e-14

    def test_difference_kills_axis_means(self, rng):
        system = make_system(8, 2, g0=3)
        f = GridFunction.random(system.group, rng)
        for r in (1, 2):
            means = f - apply_Pi0r(f, r)
            assert lp_norm(system.apply_partial(means, r).values, math.inf) <= 1e-14

    def test_fft_path_is_unitary(self, system_4x3, rng):
        f = GridFunction.random(system_4x3.group, rng)
        shifted = system_4x3.apply_partial(f, 2, method="fft") + f
        assert lp_norm(shifted.values, 2) == pytest.approx(lp_norm(f.values, 2), rel=1e-13)
        phases = np.exp(2j * np.pi * rng.uniform(size=system_4x3.group.shape))
        there = _apply_joint(f.tensor, phases)
        assert lp_norm(there.ravel(), 2) == pytest.approx(lp_norm(f.values, 2), rel=1e-13)
        back = _apply_joint(there, np.conj(phases))
        assert lp_norm(back.ravel() - f.values, 2) <= 1e-13 * lp_norm(f.values, 2)

class TestHeat:
    def test_identity_at_zero(self, system_8x2, rng):
        f = GridFunction.random(system_8x2.group, rng)
        assert _relative(system_8x2.heat(0.0, f), f) <= 1e-14

    def test_semigroup_law(self, system_8x2, rng):
        f = GridFunction.random(system_8x2.group, rng)
        composed = system_8x2.heat(0.4, system_8x2.heat(0.6, f))
        assert _relative(composed, system_8x2.heat(1.0, f)) <= 1e-12

    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_series_matches_spectral(self, system_4x3, rng, t):
        f = GridFunction.random(system_4x3.group, rng)
        series = system_4x3.heat_series(t, f)
        assert lp_norm((series - system_4x3.heat(t, f)).values, math.inf) <= 1e-10

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, math.inf])
    def test_contraction(self, system_8x2, rng, p):
        f = GridFunction.random(system_8x2.group, rng)
        assert lp_norm(system_8x2.heat(1.0, f).values, p) <= lp_norm(f.values, p) * (1 + 1e-12)

    def test_negative_time(self, system_8x2, rng):
        with pytest.raises(DomainError):
            system_8x2.heat(-1.0, GridFunction.random(system_8x2.group, rng))


class TestRiesz:
    def test_kills_constants(self, system_4x3):
        out = system_4x3.riesz(2, GridFunction.constant(system_4x3.group))
        assert lp_norm(out.values, math.inf) <= 1e-14

    @pytest.mark.parametrize("K", [2, 3, 4, 8])
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_l2_norm_is_sqrt_two(self, K, d):
        system = make_system(K, d)
        value, witness = system.riesz_norm2(1)
        assert value == pytest.approx(math.sqrt(2.0), rel=1e-12)
        op = system.as_operator("riesz", r=1)
        assert lp_norm(op.matvec(witness), 2) / lp_norm(witness, 2) == pytest.approx(math.sqrt(2.0), rel=1e-12)

    @pytest.mark.parametrize("K,d", [(8, 3), (5, 2), (4, 4)])
    def test_factorisation(self, rng, K, d):
        system = make_system(K, d)
        f = GridFunction.random(system.group, rng)
        for r in range(1, d + 1):
            assert _relative(system.factored_riesz(r, f), system.riesz(r, f)) <= 1e-12

    def test_factorisation_with_general_measure(self, rng):
        system = make_system(6, 2, measure=SymmetricMeasure.lazy(6))
        f = GridFunction.random(system.group, rng)
        assert _relative(system.factored_riesz(2, f), system.riesz(2, f)) <= 1e-12

    def test_one_dimensional_case(self, rng):
        system = make_system(8, 1)
        f = GridFunction.random(system.group, rng)
        assert _relative(system.one_dim_riesz_tensor(1, f), system.riesz(1, f)) <= 1e-13

    def test_joint_factor_values(self, system_4x3):
        multiplier = np.broadcast_to(system_4x3.joint_factor_multiplier(2, 0.5, 0.01), system_4x3.group.shape)
        lam = system_4x3.spectrum.laplacian
        for xi in [(0, 1, 0), (1, 1, 2), (3, 2, 1)]:
            rest = lam[xi[0]] + lam[xi[2]] + 2 * 0.01
            expected = eval_m_sigma(lam[xi[1]] + 0.01, rest, 0.5)
            assert multiplier[xi] == pytest.approx(expected, rel=1e-14)
        assert multiplier[1, 0, 1] == 0

    def test_eps_limit_decreases(self, system_4x3, rng):
        f = GridFunction.random(system_4x3.group, rng)
        limit = system_4x3.joint_factor(1, 0.5, 0.0, f)
        gaps = [lp_norm((system_4x3.joint_factor(1, 0.5, eps, f) - limit).values, 2) for eps in (1, 0.1, 0.01, 0.001)]
        assert all(later <= earlier for earlier, later in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 1e-2 * lp_norm(f.values, 2)

    def test_square_function_dominates_components(self, system_8x2, rng):
        f = GridFunction.random(system_8x2.group, rng)
        square = np.abs(system_8x2.square_function(f).values)
        for r in (1, 2):
            assert np.all(np.abs(system_8x2.riesz(r, f).values) <= square + 1e-14)

    @pytest.mark.parametrize("kind", ["riesz", "one-dim-riesz", "joint-factor", "riesz-ddstar", "heat", "P", "partial"])
    def test_operators_have_adjoints(self, system_8x2, kind):
        assert check_adjoint(system_8x2.as_operator(kind, r=2)) <= 1e-12

    def test_unknown_kind(self, system_8x2):
        with pytest.raises(DomainError):
            system_8x2.multiplier("wavelet")


class TestDoubleDifference:
    @pytest.mark.parametrize("K,d,g0", [(3, 1, 1), (4, 2, 1), (8, 2, 3), (2, 3, 1)])
    def test_identity_holds_for_mu_g0(self, K, d, g0, rng):
        check = make_system(K, d, g0=g0).double_difference_check(rng)
        assert check.measure_matches
        assert check.deviation <= 1e-13
        assert check.normalisation_deviation <= 1e-12

    def test_other_measure_is_flagged(self, rng):
        check = make_system(5, 1, measure=SymmetricMeasure.lazy(5)).double_difference_check(rng)
        assert not check.measure_matches
        assert check.deviation > 1e-3

    def test_sampled_on_large_groups(self, rng):
        check = make_system(8, 4).double_difference_check(rng, max_basis=64, samples=4)
        assert check.deviation <= 1e-12

    @pytest.mark.parametrize("K,d", [(2, 1), (4, 3), (7, 2)])
    def test_kernel_is_constants(self, K, d):
        assert make_system(K, d).kernel_dimension() == 1
