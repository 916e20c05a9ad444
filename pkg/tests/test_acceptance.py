"""Acceptance suite: one test per primary criterion, stated tolerances.

Each criterion prints a PASS/FAIL line with the measured values so the
suite doubles as the verification report.  The heavy campaigns are shared
module-scoped fixtures; everything here runs without the figure tooling.
"""

import numpy as np
import pytest

from exitlab.config import build_campaign, build_problem, resolve_preset
from exitlab.experiments import (run_exit_campaign, run_locus_campaign,
                                 run_metastability, run_models_check,
                                 run_probe_campaign)
from exitlab.solver import SolverConfig
from exitlab.spectral import (BALL, Domain, HilbertVector, NonlinearitySpec,
                              ReactionDiffusion, h_norm)
from exitlab.theory import choose_scales, exit_rate, scale_violations
from exitlab.cli import _basin_domains
from exitlab.config import build_test_sets

SEED = 20260810


def report(name, passed, detail):
    print(f"\n[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return passed


@pytest.fixture(scope="module")
def oracle_campaign():
    doc = resolve_preset({"preset": "single_mode_oracle", "seed": SEED})
    problem, scales = build_problem(doc)
    cfg = build_campaign(doc)
    out = run_exit_campaign(problem, problem.domain.stable_state, cfg, scales)
    return doc, problem, scales, cfg, out


@pytest.fixture(scope="module")
def rank_one_campaign():
    doc = resolve_preset({"preset": "linear_heat_rank_one", "seed": SEED,
                          "campaign": {"trials": 1500}})
    problem, scales = build_problem(doc)
    cfg = build_campaign(doc)
    test_sets = build_test_sets(doc, problem)
    out = run_locus_campaign(problem, problem.domain.stable_state, cfg,
                             scales, test_sets, lp_order=1.0)
    return doc, problem, out


class TestExitRateScaling:
    """Polynomial growth of the mean exit time with the tail index slope."""

    def test_slope_and_normalized_mean(self, oracle_campaign):
        doc, problem, scales, cfg, out = oracle_campaign
        s = out["summary"]
        alpha = problem.noise.alpha
        slope_ok = abs(s["slope"] - alpha) <= 0.15
        norm_ok = all(0.8 <= row["mean_tau_normalized"] <= 1.25
                      for row in s["per_eps"])
        censor_ok = s["valid"]
        passed = slope_ok and norm_ok and censor_ok
        detail = (f"slope={s['slope']:.4f} (target {alpha}+-0.15), "
                  f"lambda*E[tau]="
                  f"{[round(r['mean_tau_normalized'], 4) for r in s['per_eps']]}"
                  f" in [0.8, 1.25], censoring ok={censor_ok}")
        assert report("exit-rate scaling", passed, detail)


class TestNormalizedExitLaw:
    """Unit-rate exponential limit of the normalized exit times."""

    def test_ks_and_moments_at_smallest_eps(self, oracle_campaign):
        doc, problem, scales, cfg, out = oracle_campaign
        row = out["summary"]["per_eps"][-1]
        assert row["eps"] == 0.025
        ks_ok = row["ks_p"] > 0.01
        moments = row["normalized_moments"]
        ses = row["normalized_moment_se"]
        targets = (1.0, 2.0, 6.0)
        mom_ok = all(abs(m - t) <= 3 * se
                     for m, t, se in zip(moments, targets, ses))
        passed = ks_ok and mom_ok
        detail = (f"KS p={row['ks_p']:.4f} (>0.01), moments="
                  f"{[round(m, 3) for m in moments]} vs (1, 2, 6) within 3 s.e. "
                  f"{[round(3 * se, 3) for se in ses]}")
        assert report("normalized exit law", passed, detail)


class TestExitLocus:
    """Limit-measure ratios of the exit position, and locus coupling."""

    def test_half_space_frequency(self, rank_one_campaign):
        doc, problem, out = rank_one_campaign
        rows = out["summary"]["per_eps"]
        last = rows[-1]
        freq = {s["name"]: s["empirical"] for s in last["sets"]}
        ok = abs(freq["half_plus"] - 0.5) <= 0.05
        detail = (f"P(exit in shifted half space)={freq['half_plus']:.4f} "
                  f"(target 0.5 +- 0.05); complement={freq['half_minus']:.4f}")
        assert report("exit locus frequency", ok, detail)

    def test_l1_distance_decreasing(self, rank_one_campaign):
        doc, problem, out = rank_one_campaign
        dists = [row["lp_distance"] for row in out["summary"]["per_eps"]]
        ok = all(a > b for a, b in zip(dists, dists[1:]))
        detail = f"L1(trial locus, model locus)={[round(d, 4) for d in dists]}"
        assert report("exit locus L1 coupling", ok, detail)


class TestExactLawModels:
    """The single-jump models are exactly Exp/Geometric for every eps."""

    def test_models_check_100k(self):
        doc = resolve_preset({"preset": "single_mode_oracle", "seed": SEED})
        problem, scales = build_problem(doc)
        rep = run_models_check(problem, eps=0.1, scales=scales,
                               n_streams=100_000, seed=SEED)
        mean_k_ok = (abs(rep["mean_K"] - rep["expected_mean_K"])
                     <= 3 * rep["mean_K_se"])
        mean_s_ok = abs(rep["mean_scaled_time"] - 1.0) <= 3 * rep["mean_scaled_time_se"]
        passed = rep["ks_pass"] and rep["chi_square_pass"] and mean_k_ok and mean_s_ok
        detail = (f"KS p={rep['ks_p']:.4f}, chi-square p={rep['chi_square_p']:.4f} "
                  f"(both > 0.01 on 1e5 streams); mean K={rep['mean_K']:.2f} "
                  f"vs {rep['expected_mean_K']:.2f}, "
                  f"mean normalized time={rep['mean_scaled_time']:.4f} vs 1")
        assert report("exact-law models", passed, detail)


class TestCouplingAgreement:
    """The trial's causal jump index matches the model's success index."""

    def test_agreement_increases_and_exceeds_09(self, oracle_campaign):
        doc, problem, scales, cfg, out = oracle_campaign
        rows = out["summary"]["per_eps"]
        fracs = [r["agreement_fraction"] for r in rows]
        ses = [r["agreement_se"] for r in rows]
        monotone = all(b >= a - 2 * np.hypot(sa, sb)
                       for (a, sa), (b, sb) in zip(zip(fracs, ses),
                                                   zip(fracs[1:], ses[1:])))
        final_ok = fracs[-1] > 0.9
        passed = monotone and final_ok
        detail = (f"agreement={[round(f, 4) for f in fracs]} "
                  f"(monotone within 2 s.e., last > 0.9)")
        assert report("coupling agreement", passed, detail)


class TestSmallDeviationProbe:
    """Deviation of the small-jump path from the flow before the first
    large jump is rare at the chosen scales."""

    def test_probe_decreasing_and_small(self):
        doc = resolve_preset({"preset": "chafee_infante_mult", "seed": SEED})
        problem, scales = build_problem(doc)
        probe = doc["probe"]
        sol = SolverConfig(dt=0.01, track_convolution=True,
                           levelset_R=doc["domain"]["R"])
        rep = run_probe_campaign(problem, problem.domain.stable_state,
                                 probe["eps_grid"], scales,
                                 probe["replications"], SEED, sol,
                                 rate_cap=probe["rate_cap"])
        rows = rep["per_eps"]
        fracs = [r["exceed_fraction"] for r in rows]
        ses = [r["se"] for r in rows]
        decreasing = all(b <= a + 2 * np.hypot(sa, sb)
                         for (a, sa), (b, sb) in zip(zip(fracs, ses),
                                                     zip(fracs[1:], ses[1:])))
        strict_trend = fracs[-1] < fracs[0]
        small_ok = fracs[-1] < 0.05
        passed = decreasing and strict_trend and small_ok
        detail = (f"P(sup dev > gamma/2)={[round(f, 4) for f in fracs]} "
                  f"over eps={probe['eps_grid']} (decreasing, last < 0.05)")
        assert report("small-deviation probe", passed, detail)


class TestMetastability:
    """Basin-chain rates on the rescaled clock match the generator."""

    def test_symmetric_rates(self):
        doc = resolve_preset({"preset": "chafee_infante_mult", "seed": SEED,
                              "campaign": {"eps_grid": [0.1, 0.06]}})
        problem, scales = build_problem(doc)
        cfg = build_campaign(doc)
        stable, domains = _basin_domains(problem, doc)
        out = run_metastability(problem, cfg, scales, domains, stable,
                                rescaled_horizon=36.0, sample_interval=0.05)
        g_theory = np.asarray(out["summary"]["generator_theory"])
        row = out["summary"]["per_eps"][-1]
        rates = np.asarray(row["rates"])
        r_pm, r_mp = rates[0, 1], rates[1, 0]
        sym_ok = abs(r_pm - r_mp) <= 0.10 * max(r_pm, r_mp)
        m_theory = g_theory[0, 1]
        theory_ok = (abs(r_pm - m_theory) <= 0.20 * m_theory
                     and abs(r_mp - m_theory) <= 0.20 * m_theory)
        passed = sym_ok and theory_ok
        detail = (f"rates(+to-, -to+)=({r_pm:.4f}, {r_mp:.4f}) "
                  f"within 10% of each other and 20% of theory {m_theory:.4f} "
                  f"at eps={row['eps']}")
        assert report("metastability rates", passed, detail)


class TestOracleEquivalences:
    """Closed-form identities checked without any simulation."""

    def test_exit_rate_closed_form(self):
        doc = resolve_preset({"preset": "single_mode_oracle", "seed": SEED})
        problem, scales = build_problem(doc)
        lam = exit_rate(0.1, problem.domain.stable_state, problem.coefficient,
                        problem.domain, problem.noise)
        target = 0.1 ** 1.5 / 1.5
        ok = abs(lam - target) <= 1e-9 * target
        assert report("oracle: exit-rate closed form", ok,
                      f"lambda={lam!r} vs eps^alpha/alpha={target!r} (1e-9 rel)")

    def test_scale_inequalities_exact(self):
        sc = choose_scales(1.5, q=1, margin=0.8)
        violated = scale_violations(sc.gamma_star, sc.rho_star, 1.5, 1)
        checks = {
            "small": (2 * 1 + 3) * sc.gamma_star + (1 + 1.5) * sc.rho_star,
            "order": sc.gamma_star < sc.rho_star,
            "large": sc.gamma_star / 1.5 + 3 * sc.rho_star,
        }
        ok = not violated and checks["small"] < 1 and checks["large"] < 1
        assert report("oracle: scale inequalities", ok,
                      f"gamma*={sc.gamma_star}, rho*={sc.rho_star}, "
                      f"sums=({checks['small']:.4f}, {checks['large']:.4f}) < 1")

    def test_single_mode_amplitude(self):
        system = ReactionDiffusion(NonlinearitySpec.chafee_infante(2 * np.pi ** 2),
                                   n_modes=1)
        c_star = max(abs(fp.state.coeffs[0]) for fp in system.stable_states())
        amplitude = c_star * np.sqrt(2.0)
        target = np.sqrt(2.0 / 3.0)
        ok = abs(amplitude - target) <= 1e-8
        assert report("oracle: single-mode amplitude", ok,
                      f"amplitude={amplitude!r} vs sqrt(2/3)={target!r} (1e-8)")

    def test_nesting_500_points(self):
        from exitlab.coefficient import CoefficientSpec
        system = ReactionDiffusion(NonlinearitySpec.zero_reaction(), n_modes=4)
        rng = np.random.default_rng(SEED)
        dom = Domain(system, BALL, HilbertVector.zero(4), R=3.0, delta=0.15,
                     level=3, radius=1.0,
                     coefficient=CoefficientSpec(kind="additive"),
                     jump_marks=[0.2 * rng.standard_normal(4) for _ in range(8)])
        violations = 0
        for _ in range(500):
            d = rng.standard_normal(4)
            d /= h_norm(d)
            x = rng.uniform(0.0, 1.3) * d
            l1 = dom.contains(x, level=1)
            l2 = dom.contains(x, level=2)
            l3 = dom.contains(x, level=3)
            if (l3 and not l2) or (l2 and not l1):
                violations += 1
        ok = violations == 0
        assert report("oracle: reduced-domain nesting", ok,
                      f"{violations} violations on 500 random points")
