"""Jump measure calculus and samplers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from exitlab.noise import (LargeJumpStream, LevyMeasureSpec, inner_cutoff,
                           ray_intervals, regular_variation_check,
                           sample_large_jumps, small_jump_increment, substream)
from exitlab.theory import choose_scales

E1H = np.array([1.0 / np.pi])


@pytest.fixture(scope="module")
def spec15():
    return LevyMeasureSpec.symmetric(1.5, E1H, weight=0.5)


@pytest.fixture(scope="module")
def spec_log():
    return LevyMeasureSpec.symmetric(1.5, E1H, weight=0.5, slowly_varying="log")


class TestTailMass:
    def test_closed_form_unit(self, spec15):
        assert spec15.tail_mass(1.0) == pytest.approx(1.0 / 1.5, rel=1e-14)

    def test_closed_form_two(self, spec15):
        assert spec15.tail_mass(2.0) == pytest.approx(2.0 ** -1.5 / 1.5, rel=1e-14)

    def test_vanishes_at_infinity(self, spec15):
        vals = [spec15.tail_mass(s) for s in (1.0, 10.0, 100.0, 1e4)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-5

    def test_rejects_nonpositive_radius(self, spec15):
        with pytest.raises(ValueError):
            spec15.tail_mass(0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 50.0), st.floats(0.1, 50.0))
    def test_scaling_selfsimilarity(self, c, s):
        spec = LevyMeasureSpec.symmetric(1.5, E1H, weight=0.5)
        lhs = spec.tail_mass(c * s)
        rhs = c ** -1.5 * spec.tail_mass(s)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_log_tail_against_quadrature(self, spec_log):
        for s in (0.5, 1.0, 3.0):
            direct, _ = quad(lambda r: r ** -2.5 * (1 + np.log1p(r)), s, np.inf,
                             limit=300)
            assert spec_log.radial_tail(s) == pytest.approx(direct, rel=1e-9)

    def test_beta_normalization_trend(self, spec15, spec_log):
        # beta_eps / (eps^(alpha rho*) l(eps^-rho*)) -> total weight / alpha;
        # exact for constant l, monotone trend for the slow log correction
        sc = choose_scales(1.5)
        target = spec15.total_weight / spec15.alpha

        def ratios(spec, grid):
            out = []
            for eps in grid:
                rho = sc.rho(eps)
                out.append(spec.tail_mass(rho)
                           / (eps ** (spec.alpha * sc.rho_star)
                              * float(spec.ell(rho))))
            return out

        for r in ratios(spec15, np.geomspace(0.1, 1e-4, 6)):
            assert r == pytest.approx(target, rel=1e-12)
        errs = [abs(r - target) for r in ratios(spec_log,
                                                np.geomspace(0.1, 1e-12, 6))]
        assert all(a > b for a, b in zip(errs, errs[1:]))


class TestSpecValidation:
    def test_requires_unit_directions(self):
        with pytest.raises(ValueError):
            LevyMeasureSpec(alpha=1.5, directions=np.array([[1.0]]),
                            weights=np.array([1.0]))

    def test_requires_positive_weights(self):
        with pytest.raises(ValueError):
            LevyMeasureSpec(alpha=1.5, directions=np.array([E1H, -E1H]),
                            weights=np.array([0.5, 0.0]))

    def test_symmetry_detector(self, spec15):
        assert spec15.is_symmetric()
        lopsided = LevyMeasureSpec(alpha=1.5, directions=np.array([E1H, -E1H]),
                                   weights=np.array([0.7, 0.3]))
        assert not lopsided.is_symmetric()


class TestLargeJumps:
    def test_reproducible(self, spec15):
        s1 = LargeJumpStream(spec15, 2.0, substream(9, 3, 0))
        s2 = LargeJumpStream(spec15, 2.0, substream(9, 3, 0))
        for k in range(1, 200):
            assert s1.arrival(k) == s2.arrival(k)
            assert np.array_equal(s1.mark(k), s2.mark(k))

    def test_marks_above_threshold(self, spec15):
        s = LargeJumpStream(spec15, 3.0, substream(1, 0, 0))
        assert all(s.radius(k) > 3.0 for k in range(1, 500))

    def test_poisson_count(self, spec15):
        # mean count over the horizon within 3 standard errors of beta * T
        sc = choose_scales(1.5)
        eps, horizon, reps = 0.1, 20.0, 10_000
        beta = spec15.tail_mass(sc.rho(eps))
        counts = np.empty(reps)
        for i in range(reps):
            counts[i] = len(sample_large_jumps(spec15, eps, sc, horizon,
                                               substream(77, i, 0)))
        target = beta * horizon
        se = np.std(counts, ddof=1) / np.sqrt(reps)
        assert abs(counts.mean() - target) < 3 * se

    def test_pareto_survival(self, spec15):
        sc = choose_scales(1.5)
        eps = 0.1
        rho = sc.rho(eps)
        s = LargeJumpStream(spec15, rho, substream(5, 0, 0))
        radii = np.array([s.radius(k) for k in range(1, 20_001)])
        frac = np.mean(radii > 2 * rho)
        target = 2.0 ** -1.5
        se = np.sqrt(target * (1 - target) / radii.size)
        assert abs(frac - target) < 3 * se

    def test_short_horizon_mostly_empty(self, spec15):
        sc = choose_scales(1.5)
        eps = 0.1
        beta = spec15.tail_mass(sc.rho(eps))
        horizon = 0.05 / beta
        empties = sum(
            not sample_large_jumps(spec15, eps, sc, horizon, substream(3, i, 0))
            for i in range(200))
        assert empties > 150

    def test_intensity_underflow(self, spec15):
        with pytest.raises(ValueError):
            LargeJumpStream(spec15, 1e250, substream(0, 0, 0))

    def test_log_radius_law(self, spec_log):
        # survival of the sampled radii matches the normalized tail function
        s = LargeJumpStream(spec_log, 2.0, substream(13, 0, 0))
        radii = np.array([s.radius(k) for k in range(1, 5001)])
        total = spec_log.radial_tail(2.0)
        for r0 in (3.0, 5.0, 10.0):
            target = spec_log.radial_tail(r0) / total
            frac = np.mean(radii > r0)
            se = np.sqrt(target * (1 - target) / radii.size)
            assert abs(frac - target) < 4 * se


class TestInnerCutoff:
    def test_variance_target_attainable_small_alpha(self):
        spec = LevyMeasureSpec.symmetric(0.5, E1H, weight=0.5)
        delta, rep = inner_cutoff(spec, 2.0, variance_target=1e-6,
                                  rate_cap=1e6)
        assert rep["dropped_second_moment"] <= 1e-6 * 1.01

    def test_rate_cap_binds_for_heavy_activity(self):
        spec = LevyMeasureSpec.symmetric(1.5, E1H, weight=0.5)
        delta, rep = inner_cutoff(spec, 2.0, variance_target=1e-6,
                                  rate_cap=100.0)
        assert rep["intensity"] <= 100.0 * 1.01
        # the dropped variance is reported, not hidden
        assert rep["dropped_second_moment"] > 1e-6

    def test_cutoff_below_threshold_required(self, spec15):
        with pytest.raises(ValueError):
            inner_cutoff(spec15, 1e-9, rate_cap=1e-9)


class TestSmallJumps:
    def test_band_count_matches_intensity(self, spec15):
        rho, delta = 2.0, 0.05
        expected = (spec15.tail_mass(delta) - spec15.tail_mass(rho))
        reps, length = 3000, 2.0
        counts = np.empty(reps)
        for i in range(reps):
            seg = small_jump_increment(spec15, rho, delta, 0.0, length,
                                       substream(21, i, 1))
            counts[i] = seg.times.size
        target = expected * length
        se = np.std(counts, ddof=1) / np.sqrt(reps)
        assert abs(counts.mean() - target) < 3 * se

    def test_radii_inside_band(self, spec15):
        seg = small_jump_increment(spec15, 2.0, 0.05, 0.0, 50.0,
                                   substream(2, 0, 1))
        radii = np.sqrt(np.pi ** 2 * np.sum(seg.marks ** 2, axis=1))
        assert np.all(radii > 0.05) and np.all(radii <= 2.0)

    def test_symmetric_drift_vanishes(self, spec15):
        seg = small_jump_increment(spec15, 2.0, 0.05, 0.0, 1.0,
                                   substream(2, 1, 1))
        assert np.allclose(seg.drift, 0.0)

    def test_asymmetric_drift_closed_form(self):
        spec = LevyMeasureSpec(alpha=1.5, directions=np.array([E1H]),
                               weights=np.array([1.0]))
        rho, delta = 2.0, 0.1
        seg = small_jump_increment(spec, rho, delta, 0.0, 1.0,
                                   substream(0, 0, 1))
        # net drift -int_{delta<r<=1} r nu(dr) along the atom direction
        expected = -(delta ** -0.5 - 1.0) / 0.5 * E1H
        assert np.allclose(seg.drift, expected, rtol=1e-12)
        # bookkeeping split sums to the net value
        assert np.allclose(seg.drift_compensated + seg.drift_uncompensated,
                           seg.drift, rtol=1e-12)

    def test_dropped_variance_formula(self, spec15):
        delta = 0.07
        seg = small_jump_increment(spec15, 2.0, delta, 0.0, 1.0,
                                   substream(0, 1, 1))
        assert seg.dropped_second_moment == pytest.approx(
            delta ** 0.5 / 0.5, rel=1e-12)

    def test_cutoff_order_error(self, spec15):
        with pytest.raises(ValueError):
            small_jump_increment(spec15, 1.0, 1.5, 0.0, 1.0, substream(0, 0, 1))


class TestRegularVariation:
    def test_constant_ell_exact(self, spec15):
        rows = regular_variation_check(
            spec15, lambda z: np.sqrt(np.pi ** 2 * np.sum(z * z)) > 1.0,
            [2.0, 10.0, 1e3])
        for row in rows:
            assert row["ratio"] == pytest.approx(1.0, rel=1e-9)

    def test_log_ell_approaches_one(self, spec_log):
        rows = regular_variation_check(
            spec_log, lambda z: np.sqrt(np.pi ** 2 * np.sum(z * z)) > 1.0,
            [1e3, 1e6, 1e9])
        ratios = [row["ratio"] for row in rows]
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)
        assert ratios[-1] == pytest.approx(1.0, abs=1e-2)

    def test_zero_measure_set_rejected(self, spec15):
        # a set the atom rays never enter
        with pytest.raises(ValueError):
            regular_variation_check(spec15, lambda z: False, [10.0])


class TestRayIntervals:
    def test_simple_tail_interval(self):
        ivs = ray_intervals(lambda r: r > 2.0, r_cap=1e4)
        assert len(ivs) == 1
        lo, hi = ivs[0]
        assert lo == pytest.approx(2.0, rel=1e-9)
        assert np.isinf(hi)

    def test_window_interval(self):
        ivs = ray_intervals(lambda r: 1.0 < r < 3.0, r_cap=1e4)
        assert len(ivs) == 1
        assert ivs[0][0] == pytest.approx(1.0, rel=1e-9)
        assert ivs[0][1] == pytest.approx(3.0, rel=1e-9)


class TestConfigSerialization:
    def test_measure_roundtrip_through_config(self, spec15):
        from exitlab.config import build_noise
        doc = {"noise": spec15.to_config()}
        back = build_noise(doc, n_modes=1)
        assert back.alpha == spec15.alpha
        assert np.allclose(back.directions, spec15.directions)
        assert np.allclose(back.weights, spec15.weights)
        assert back.slowly_varying == spec15.slowly_varying
