"""Deterministic core: norms, flow, potential, equilibria, domains."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exitlab.spectral import (BALL, BASIN, SEPARATRIX, DivergenceError, Domain,
                              HilbertVector, NonlinearitySpec,
                              ReactionDiffusion, h_norm, in_reduced_domain,
                              l2_norm)

A_CI = 2.0 * np.pi ** 2


@pytest.fixture(scope="module")
def heat1():
    return ReactionDiffusion(NonlinearitySpec.zero_reaction(), n_modes=1)


@pytest.fixture(scope="module")
def heat4():
    return ReactionDiffusion(NonlinearitySpec.zero_reaction(), n_modes=4)


@pytest.fixture(scope="module")
def ci1():
    return ReactionDiffusion(NonlinearitySpec.chafee_infante(A_CI), n_modes=1)


@pytest.fixture(scope="module")
def ci8():
    return ReactionDiffusion(NonlinearitySpec.chafee_infante(A_CI), n_modes=8)


class TestNorms:
    def test_single_mode(self):
        assert h_norm(HilbertVector.mode(4, 1)) == pytest.approx(np.pi)

    def test_zero_vector(self):
        assert h_norm(HilbertVector.zero(3)) == 0.0
        assert l2_norm(HilbertVector.zero(3)) == 0.0

    def test_two_modes(self):
        # sqrt(pi^2 + 4 pi^2) from the first two eigenvalues
        x = HilbertVector(np.array([1.0, 1.0]))
        assert h_norm(x) == pytest.approx(np.pi * np.sqrt(5.0), rel=1e-12)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            HilbertVector(np.array([np.nan, 0.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=12))
    def test_poincare(self, coeffs):
        x = HilbertVector(np.array(coeffs))
        assert l2_norm(x) <= h_norm(x) / np.pi + 1e-12


class TestFlow:
    def test_heat_semigroup_single_mode(self, heat4):
        u = heat4.evolve(HilbertVector.mode(4, 1), 0.1)
        assert u.coeffs[0] == pytest.approx(np.exp(-np.pi ** 2 * 0.1), rel=1e-12)
        assert np.allclose(u.coeffs[1:], 0.0)

    def test_semigroup_contraction(self, heat4):
        x = HilbertVector(np.array([0.4, -0.3, 0.2, 0.1]))
        for t in (0.05, 0.2, 1.0):
            u = heat4.evolve(x, t)
            assert h_norm(u) <= np.exp(-np.pi ** 2 * t) * h_norm(x) * (1 + 1e-10)

    def test_zero_is_invariant(self, ci1):
        u = ci1.evolve(HilbertVector.zero(1), 2.0)
        assert h_norm(u) == 0.0

    def test_single_mode_attractor(self, ci1):
        # one-mode projection: -pi^2 c + a c - (3/2) a c^3 = 0 at the stable
        # amplitude, solved in closed form as the oracle
        c_star = np.sqrt((A_CI - np.pi ** 2) / (1.5 * A_CI))
        u = ci1.evolve(HilbertVector(np.array([0.5])), 12.0)
        assert u.coeffs[0] == pytest.approx(c_star, abs=1e-9)

    def test_blowup_guard(self):
        # positive leading growth is rejected at construction, so drive the
        # guard with a huge state instead
        sys4 = ReactionDiffusion(NonlinearitySpec.zero_reaction(), n_modes=4)
        with pytest.raises(DivergenceError):
            sys4.evolve(HilbertVector(np.array([5.0, 0, 0, 0])), 1.0, cap=10.0)


class TestPotential:
    def test_zero_state(self, ci1):
        assert ci1.potential(HilbertVector.zero(1)) == pytest.approx(0.0, abs=1e-14)

    def test_single_mode_closed_form(self, ci1):
        # int sin^2 = 1/2 and int sin^4 = 3/8 give, for x = c e_1,
        # V = pi^2 c^2 / 2 + a (3 c^4 / 8 - c^2 / 2)
        for c in (0.3, 0.7, 1.1):
            expected = 0.5 * np.pi ** 2 * c ** 2 + A_CI * (0.375 * c ** 4 - 0.5 * c ** 2)
            assert ci1.potential(HilbertVector(np.array([c]))) == pytest.approx(
                expected, rel=1e-12)

    def test_quadrature_matches_dense_integration(self, ci8):
        rng = np.random.default_rng(3)
        c = 0.3 * rng.standard_normal(8)
        zeta = np.linspace(0.0, 1.0, 20001)
        u = np.sin(np.pi * np.outer(zeta, np.arange(1, 9))) @ (np.sqrt(2) * c)
        F = -A_CI * (u ** 4 / 4 - u ** 2 / 2)
        lam = (np.pi * np.arange(1, 9)) ** 2
        dense = 0.5 * np.sum(lam * c * c) - np.trapezoid(F, zeta)
        assert ci8.potential(HilbertVector(c)) == pytest.approx(dense, rel=1e-8)

    def test_lyapunov_descent(self, ci8):
        rng = np.random.default_rng(11)
        x = HilbertVector(0.5 * rng.standard_normal(8))
        vals = []
        state = x
        for _ in range(6):
            vals.append(ci8.potential(state))
            state = ci8.evolve(state, 0.25)
        diffs = np.diff(vals)
        assert np.all(diffs <= 1e-8)

    def test_levelset_invariance(self, ci8):
        R = 4.0
        dstar = ci8.level_threshold(R)
        rng = np.random.default_rng(5)
        d = rng.standard_normal(8)
        x = HilbertVector(2.0 * d / h_norm(d))  # inside B_R, hence inside U^R
        assert ci8.potential(x) <= dstar
        state = x
        for _ in range(5):
            state = ci8.evolve(state, 0.3)
            assert ci8.potential(state) <= dstar + 1e-10


class TestFixedPoints:
    def test_linear_heat_origin_only(self, heat4):
        fps = heat4.find_fixed_points()
        assert len(fps) == 1
        assert fps[0].stable
        assert h_norm(fps[0].state) == pytest.approx(0.0, abs=1e-12)

    def test_single_mode_chafee_infante(self, ci1):
        fps = ci1.find_fixed_points()
        assert len(fps) == 3
        c_star = np.sqrt((A_CI - np.pi ** 2) / (1.5 * A_CI))
        stable = sorted(fp.state.coeffs[0] for fp in fps if fp.stable)
        assert stable == pytest.approx([-c_star, c_star], abs=1e-10)
        unstable = [fp for fp in fps if not fp.stable]
        assert len(unstable) == 1
        assert h_norm(unstable[0].state) == pytest.approx(0.0, abs=1e-10)

    def test_stable_amplitude_value(self, ci1):
        # amplitude of the profile at the midpoint: c * sqrt(2) = sqrt(2/3)
        c_star = [fp for fp in ci1.fixed_points() if fp.stable][0].state.coeffs[0]
        assert abs(c_star) * np.sqrt(2.0) == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-8)

    def test_desk_resolution_two_stable(self, ci8):
        fps = ci8.find_fixed_points()
        stable = [fp for fp in fps if fp.stable]
        assert len(stable) == 2
        plus = max(stable, key=lambda fp: fp.state.coeffs[0])
        minus = min(stable, key=lambda fp: fp.state.coeffs[0])
        assert np.allclose(plus.state.coeffs, -minus.state.coeffs, atol=1e-9)
        # odd symmetric profile: even sine modes vanish
        assert np.allclose(plus.state.coeffs[1::2], 0.0, atol=1e-9)
        for fp in fps:
            assert fp.residual < 1e-9


class TestBasins:
    def test_at_fixed_point(self, ci8):
        plus = max(ci8.stable_states(), key=lambda fp: fp.state.coeffs[0])
        assert ci8.classify_basin(plus.state) == plus.index

    def test_single_mode_sign(self, ci1):
        plus = max(ci1.stable_states(), key=lambda fp: fp.state.coeffs[0])
        minus = min(ci1.stable_states(), key=lambda fp: fp.state.coeffs[0])
        assert ci1.classify_basin(HilbertVector(np.array([0.1]))) == plus.index
        assert ci1.classify_basin(HilbertVector(np.array([-0.1]))) == minus.index

    def test_origin_is_separatrix(self, ci1):
        assert ci1.classify_basin(HilbertVector.zero(1), horizon=5.0) == SEPARATRIX

    def test_flow_consistency(self, ci8):
        rng = np.random.default_rng(17)
        for _ in range(4):
            x = HilbertVector(0.5 * rng.standard_normal(8))
            verdict = ci8.classify_basin(x)
            if verdict == SEPARATRIX:
                continue
            moved = ci8.evolve(x, 0.5)
            assert ci8.classify_basin(moved) == verdict

    def test_sign_flip_symmetry(self, ci8):
        rng = np.random.default_rng(23)
        stable = {fp.index for fp in ci8.stable_states()}
        for _ in range(4):
            x = HilbertVector(0.4 * rng.standard_normal(8))
            v1 = ci8.classify_basin(x)
            v2 = ci8.classify_basin(HilbertVector(-x.coeffs))
            if v1 in stable:
                assert v2 in stable and v2 != v1


class TestRelaxation:
    def test_at_fixed_point(self, heat1):
        fp = heat1.fixed_points()[0]
        assert heat1.relaxation_time(fp.state, 0.1, target=fp.state) == 0.0

    def test_linear_heat_closed_form(self, heat1):
        # ||u(t)|| = e^{-pi^2 t} ||x||, so ||u(t)|| < gamma/4 happens at
        # t = ln(4 ||x|| / gamma) / pi^2 (x = e_1 has H-norm pi)
        x = HilbertVector.mode(1, 1)
        for gamma in (0.5, 0.1, 0.02):
            expected = np.log(4.0 * np.pi / gamma) / np.pi ** 2
            got = heat1.relaxation_time(x, gamma,
                                        target=HilbertVector.zero(1), dt=1e-3)
            assert got == pytest.approx(expected, abs=2e-3)

    def test_kappa0_positive_and_stable(self, heat1):
        dom = Domain(heat1, BALL, HilbertVector.zero(1), R=2.0, delta=0.05,
                     level=2, radius=1.0)
        gammas = [1e-1, 1e-2, 1e-3, 1e-4]
        k0 = heat1.estimate_kappa0(dom, gammas, n_samples=3)
        assert k0 > 0
        # exact slope for the linear heat flow is 1/pi^2
        assert k0 == pytest.approx(1.0 / np.pi ** 2, rel=0.05)

    def test_horizon_error(self, heat1):
        with pytest.raises(RuntimeError):
            heat1.relaxation_time(HilbertVector.mode(1, 1), 1e-9,
                                  target=HilbertVector.zero(1), horizon=0.5)


class TestDomains:
    def test_ball_center_level2(self, heat4):
        dom = Domain(heat4, BALL, HilbertVector.zero(4), R=2.0, delta=0.1,
                     level=2, radius=1.0)
        assert in_reduced_domain(HilbertVector.zero(4), dom)

    def test_ball_level2_margin(self, heat4):
        dom = Domain(heat4, BALL, HilbertVector.zero(4), R=2.0, delta=0.1,
                     level=2, radius=1.0)
        x = HilbertVector(np.array([0.95 / np.pi, 0, 0, 0]))  # H-norm 0.95
        assert dom.contains(x, level=1)
        assert not dom.contains(x, level=2)  # distance to complement 0.05 < 0.1

    def test_ball_nesting_500_points(self, heat4):
        dom = Domain(heat4, BALL, HilbertVector.zero(4), R=3.0, delta=0.15,
                     level=3, radius=1.0)
        from exitlab.coefficient import CoefficientSpec
        rng = np.random.default_rng(29)
        marks = [rng.standard_normal(4) * 0.2 for _ in range(8)]
        dom.coefficient = CoefficientSpec(kind="additive")
        dom.jump_marks = marks
        violations = 0
        for _ in range(500):
            d = rng.standard_normal(4)
            d /= h_norm(d)
            x = rng.uniform(0, 1.3) * d
            l1 = dom.contains(x, level=1)
            l2 = dom.contains(x, level=2)
            l3 = dom.contains(x, level=3)
            if l3 and not l2:
                violations += 1
            if l2 and not l1:
                violations += 1
        assert violations == 0

    def test_basin_domain_membership(self, ci8):
        plus = max(ci8.stable_states(), key=lambda fp: fp.state.coeffs[0])
        dom = Domain(ci8, BASIN, plus.state, R=6.0, delta=0.05, level=2,
                     basin_index=plus.index)
        assert dom.contains(plus.state, level=2)
        assert not dom.contains(HilbertVector(-plus.state.coeffs), level=1)

    def test_basin_nesting_small_sample(self, ci8):
        plus = max(ci8.stable_states(), key=lambda fp: fp.state.coeffs[0])
        from exitlab.coefficient import CoefficientSpec
        rng = np.random.default_rng(31)
        dom = Domain(ci8, BASIN, plus.state, R=6.0, delta=0.05, level=3,
                     basin_index=plus.index,
                     coefficient=CoefficientSpec(kind="norm_multiplicative"),
                     jump_marks=[0.1 * rng.standard_normal(8) for _ in range(4)])
        for _ in range(12):
            x = plus.state.coeffs + 0.3 * rng.standard_normal(8)
            l1, l2, l3 = (dom.contains(x, level=k) for k in (1, 2, 3))
            assert (not l3 or l2) and (not l2 or l1)

    def test_exact_distance_only_for_balls(self, ci8):
        plus = max(ci8.stable_states(), key=lambda fp: fp.state.coeffs[0])
        dom = Domain(ci8, BASIN, plus.state, R=6.0, delta=0.05, level=2,
                     basin_index=plus.index)
        with pytest.raises(ValueError):
            dom.distance_to_complement(plus.state)

    def test_inward_pointing_ball(self, heat4):
        dom = Domain(heat4, BALL, HilbertVector.zero(4), R=2.0, delta=0.1,
                     level=2, radius=1.0)
        assert dom.inward_pointing_margin(n_samples=32) > 0

    def test_ball_must_fit_level_set(self, heat4):
        with pytest.raises(ValueError):
            Domain(heat4, BALL, HilbertVector.zero(4), R=0.5, delta=0.1,
                   level=2, radius=1.0)
