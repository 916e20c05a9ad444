"""Campaign orchestration, statistics and persistence.

Campaigns dispatch independent trials keyed by (campaign seed, trial id),
so aggregates are invariant under reordering and sharding.  Records are
persisted to CSV with exact float round-trip; summaries (per-epsilon
statistics, regression slope, theory block) go to JSON.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import chi2 as chi2_dist

from . import theory
from .models import build_model, model_locus
from .noise import (CHANNEL_LARGE, CHANNEL_SMALL, LargeJumpStream,
                    inner_cutoff, substream)
from .solver import ExitProblem, SolverConfig, run_trial, small_deviation_probe
from .spectral import Domain, HilbertVector, as_coeffs, h_dist


# -- statistics -------------------------------------------------------------

def ks_statistic(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]):
    """One-sample Kolmogorov-Smirnov sup-distance with asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 50:
        raise ValueError("KS test needs at least 50 samples")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    p = float(kolmogorov(np.sqrt(n) * d))
    return d, p


def chi_square(counts: Sequence[float], expected: Sequence[float]):
    """Pearson chi-square statistic and p-value (dof = bins - 1)."""
    obs = np.asarray(counts, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.size == 0:
        raise ValueError("empty count vector")
    if obs.shape != exp.shape:
        raise ValueError("counts and expected must align")
    if np.any(exp < 5):
        raise ValueError("expected counts must be at least 5 per bin")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    return stat, float(chi2_dist.sf(stat, dof))


def geometric_bins(n: int, p: float, min_expected: float = 5.0):
    """Bin edges 1..K plus tail with every expected count >= min_expected."""
    edges = []
    k = 1
    while True:
        exp_k = n * p * (1 - p) ** (k - 1)
        tail = n * (1 - p) ** k
        if exp_k < min_expected or tail < min_expected:
            break
        edges.append(k)
        k += 1
    if not edges:
        raise ValueError("sample too small for a geometric chi-square binning")
    expected = [n * p * (1 - p) ** (k - 1) for k in edges]
    expected.append(n * (1 - p) ** edges[-1])  # tail bin
    return edges, np.asarray(expected)


def exp1_cdf(x):
    return 1.0 - np.exp(-np.asarray(x, dtype=float))


def fit_loglog_slope(eps_grid: Sequence[float], values: Sequence[float]):
    """OLS slope of log(values) against log(1/eps), with its standard error."""
    x = np.log(1.0 / np.asarray(eps_grid, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 3:
        raise ValueError("need at least 3 grid points for a slope estimate")
    a = np.vstack([x, np.ones_like(x)]).T
    coefs, res, _, _ = np.linalg.lstsq(a, y, rcond=None)
    slope = float(coefs[0])
    dof = x.size - 2
    if dof > 0 and res.size:
        s2 = float(res[0]) / dof
        sxx = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(s2 / sxx)
    else:
        stderr = 0.0
    return slope, stderr


# -- records ----------------------------------------------------------------

@dataclass
class ExitRecord:
    trial_id: int
    epsilon: float
    censored: bool
    tau: Optional[float]
    tau_normalized: Optional[float]
    jump_count: int
    causal_jump_index: Optional[int]
    model_K: int
    model_s_bar: float
    agreement: Optional[bool]
    locus: Optional[np.ndarray]

    def __eq__(self, other):
        if not isinstance(other, ExitRecord):
            return NotImplemented
        same_locus = (self.locus is None and other.locus is None) or (
            self.locus is not None and other.locus is not None
            and np.array_equal(self.locus, other.locus))
        return same_locus and (
            (self.trial_id, self.epsilon, self.censored, self.tau,
             self.tau_normalized, self.jump_count, self.causal_jump_index,
             self.model_K, self.model_s_bar, self.agreement)
            == (other.trial_id, other.epsilon, other.censored, other.tau,
                other.tau_normalized, other.jump_count, other.causal_jump_index,
                other.model_K, other.model_s_bar, other.agreement))


def csv_headers(n_modes: int) -> List[str]:
    return (["trial_id", "epsilon", "censored", "tau", "tau_normalized",
             "jump_count", "causal_jump_index", "model_K", "model_s_bar",
             "agreement"] + [f"locus_c{i}" for i in range(1, n_modes + 1)])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "True" if v else "False"
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def write_records_csv(path, records: Sequence[ExitRecord], n_modes: int):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_headers(n_modes))
        for r in records:
            locus = ([""] * n_modes if r.locus is None
                     else [repr(float(v)) for v in r.locus])
            w.writerow([_fmt(r.trial_id), _fmt(r.epsilon), _fmt(r.censored),
                        _fmt(r.tau), _fmt(r.tau_normalized), _fmt(r.jump_count),
                        _fmt(r.causal_jump_index), _fmt(r.model_K),
                        _fmt(r.model_s_bar), _fmt(r.agreement)] + locus)


def read_records_csv(path) -> List[ExitRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        headers = next(reader)
        n_modes = sum(1 for h in headers if h.startswith("locus_c"))
        for row in reader:
            vals = dict(zip(headers, row))
            locus_vals = [vals[f"locus_c{i}"] for i in range(1, n_modes + 1)]
            locus = (None if locus_vals[0] == ""
                     else np.array([float(v) for v in locus_vals]))
            records.append(ExitRecord(
                trial_id=int(vals["trial_id"]),
                epsilon=float(vals["epsilon"]),
                censored=vals["censored"] == "True",
                tau=None if vals["tau"] == "" else float(vals["tau"]),
                tau_normalized=(None if vals["tau_normalized"] == ""
                                else float(vals["tau_normalized"])),
                jump_count=int(vals["jump_count"]),
                causal_jump_index=(None if vals["causal_jump_index"] == ""
                                   else int(vals["causal_jump_index"])),
                model_K=int(vals["model_K"]),
                model_s_bar=float(vals["model_s_bar"]),
                agreement=(None if vals["agreement"] == ""
                           else vals["agreement"] == "True"),
                locus=locus))
    return records


# -- campaign configuration --------------------------------------------------

@dataclass
class CampaignConfig:
    """Validated campaign block: grid, trial budget, seeds, solver knobs."""

    eps_grid: List[float]
    trials: int
    seed: int
    dt: float = 1e-2
    horizon_factor: float = 20.0
    refine_exit: bool = False
    small_jump_rate_cap: float = 100.0
    small_jump_variance_target: float = 1e-6
    significance: float = 0.01
    se_band: float = 3.0
    max_censoring: float = 0.20

    def __post_init__(self):
        eps = [float(e) for e in self.eps_grid]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps grid must be strictly decreasing")
        if any(e <= 0 for e in eps):
            raise ValueError("eps values must be positive")
        if self.trials < 100:
            raise ValueError("campaign needs at least 100 trials per eps")
        self.eps_grid = eps

    def solver_config(self) -> SolverConfig:
        return SolverConfig(dt=self.dt, refine_exit=self.refine_exit)


def _trial_records(problem: ExitProblem, x0, eps: float,
                   scales: theory.ScaleParams, cfg: CampaignConfig,
                   lam: float, trial_ids: Sequence[int],
                   collect_model_locus: bool = False):
    """Run the given trial ids at one epsilon; one stream per trial."""
    rho = scales.rho(eps)
    delta_in, _ = inner_cutoff(problem.noise, rho,
                               variance_target=cfg.small_jump_variance_target,
                               rate_cap=cfg.small_jump_rate_cap)
    horizon = cfg.horizon_factor / lam
    sol_cfg = cfg.solver_config()
    phi = problem.domain.stable_state
    records = []
    model_loci = []
    for tid in trial_ids:
        stream = LargeJumpStream(problem.noise, rho,
                                 substream(cfg.seed, tid, CHANNEL_LARGE))
        rng_small = substream(cfg.seed, tid, CHANNEL_SMALL)
        res = run_trial(problem, x0, eps, scales, stream, rng_small,
                        horizon, sol_cfg, delta_in=delta_in)
        outcome = build_model(stream, eps, phi, problem.coefficient,
                              problem.domain, lam)
        agreement = (None if res.censored
                     else res.causal_jump_index == outcome.jump_index)
        records.append(ExitRecord(
            trial_id=tid, epsilon=eps, censored=res.censored, tau=res.tau,
            tau_normalized=None if res.censored else lam * res.tau,
            jump_count=res.jump_count,
            causal_jump_index=res.causal_jump_index,
            model_K=outcome.jump_index, model_s_bar=outcome.arrival_time,
            agreement=agreement, locus=res.locus))
        if collect_model_locus:
            model_loci.append(as_coeffs(model_locus(
                stream, outcome, eps, phi, problem.coefficient)))
    return records, model_loci


def run_exit_campaign(problem: ExitProblem, x0, cfg: CampaignConfig,
                      scales: theory.ScaleParams,
                      out_dir: Optional[Path] = None,
                      trial_id_offset: int = 0, threads: int = 1,
                      preset_name: Optional[str] = None) -> dict:
    """Exit-time scaling campaign over the epsilon grid.

    Produces one record per trial plus a summary with per-epsilon
    normalized moments, KS statistics, censoring fractions and the fitted
    slope of log E[tau] against log(1/eps).  Censored records are excluded
    from moment and KS statistics but counted in the censoring fraction.
    Trials own disjoint counter-based streams, so any dispatch (serial or
    a worker pool) yields the identical record set.
    """
    phi = problem.domain.stable_state
    all_records: List[ExitRecord] = []
    per_eps = []
    mean_taus = []
    valid = True
    for i, eps in enumerate(cfg.eps_grid):
        lam = theory.exit_rate(eps, phi, problem.coefficient, problem.domain,
                               problem.noise)
        lam2 = _level2_rate(problem, eps, phi)
        ids = [trial_id_offset + i * cfg.trials + j for j in range(cfg.trials)]
        if threads > 1:
            records = _dispatch_trials(problem, x0, eps, scales, cfg, lam,
                                       ids, threads)
        else:
            records, _ = _trial_records(problem, x0, eps, scales, cfg, lam, ids)
        all_records.extend(records)
        taus = np.array([r.tau for r in records if not r.censored])
        norm = lam * taus
        censor_frac = 1.0 - taus.size / cfg.trials
        if censor_frac > cfg.max_censoring:
            valid = False
        moments = [float(np.mean(norm ** k)) for k in (1, 2, 3)]
        mom_se = [float(np.std(norm ** k, ddof=1) / np.sqrt(norm.size))
                  for k in (1, 2, 3)]
        ks_d, ks_p = ks_statistic(norm, exp1_cdf)
        agree = [r.agreement for r in records if r.agreement is not None]
        per_eps.append({
            "eps": eps, "lambda_theory": lam, "lambda_level2": lam2,
            "n_trials": cfg.trials, "n_exited": int(taus.size),
            "censored_fraction": censor_frac,
            "mean_tau": float(np.mean(taus)),
            "var_tau": float(np.var(taus, ddof=1)),
            "mean_tau_normalized": moments[0],
            "normalized_moments": moments,
            "normalized_moment_se": mom_se,
            "ks_stat": ks_d, "ks_p": ks_p,
            "agreement_fraction": float(np.mean(agree)) if agree else None,
            "agreement_se": (float(np.sqrt(np.mean(agree) * (1 - np.mean(agree))
                                           / len(agree))) if agree else None),
            "mean_jump_count": float(np.mean([r.jump_count for r in records])),
        })
        mean_taus.append(float(np.mean(taus)))
    if len(cfg.eps_grid) >= 3:
        slope, slope_se = fit_loglog_slope(cfg.eps_grid, mean_taus)
    else:
        slope, slope_se = None, None
    summary = {
        "kind": "exit",
        "preset": preset_name,
        "alpha": problem.noise.alpha,
        "eps_grid": cfg.eps_grid,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "valid": valid,
        "per_eps": per_eps,
        "slope": slope,
        "slope_stderr": slope_se,
        "significance": cfg.significance,
        "theory": {
            "scales": {
                "gamma_star": scales.gamma_star,
                "rho_star": scales.rho_star,
                "theta_star": scales.theta_star,
                "q": scales.q,
            },
            "exit_mass": theory.limit_measure(
                lambda c: not problem.domain.contains(c, level=1),
                phi, problem.coefficient, problem.noise),
        },
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_records_csv(out_dir / "exit_records.csv", all_records,
                          problem.system.n_modes)
        (out_dir / "exit_summary.json").write_text(json.dumps(summary, indent=2))
    return {"summary": summary, "records": all_records}


def _trial_chunk(args):
    return _trial_records(*args)[0]


def _dispatch_trials(problem, x0, eps, scales, cfg, lam, ids, threads):
    """Shard trial ids over a process pool; merge preserves id order."""
    from concurrent.futures import ProcessPoolExecutor

    chunks = [ids[j::threads] for j in range(threads)]
    work = [(problem, x0, eps, scales, cfg, lam, chunk)
            for chunk in chunks if chunk]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_trial_chunk, work))
    merged = [r for part in parts for r in part]
    merged.sort(key=lambda r: r.trial_id)
    return merged


def _level2_rate(problem: ExitProblem, eps: float, phi) -> Optional[float]:
    dom = problem.domain
    if dom.kind != "ball":
        return None
    shrunk = Domain(dom.system, dom.kind, dom.stable_state, R=dom.R,
                    delta=dom.delta, level=1, radius=dom.radius - dom.delta)
    return theory.exit_rate(eps, phi, problem.coefficient, shrunk, problem.noise)


# -- locus campaign ----------------------------------------------------------

@dataclass(frozen=True)
class TestSet:
    """Named membership predicate with cached theory interval machinery."""

    name: str
    predicate: Callable[[np.ndarray], bool]


def run_locus_campaign(problem: ExitProblem, x0, cfg: CampaignConfig,
                       scales: theory.ScaleParams, test_sets: Sequence[TestSet],
                       lp_order: float = 1.0,
                       out_dir: Optional[Path] = None,
                       preset_name: Optional[str] = None) -> dict:
    """Exit-locus frequencies against the limit-measure ratios.

    Each test set must carry no limit mass on its boundary (checked by the
    jitter detector); the campaign also reports the mean ||trial locus -
    model locus||^p coupling distance, which needs p below the tail index
    for finite moments.
    """
    if lp_order >= problem.noise.alpha:
        raise ValueError("locus distance order must satisfy p < alpha")
    phi = problem.domain.stable_state
    dom = problem.domain

    def outside(c):
        return not dom.contains(c, level=1)

    m_dc = theory.limit_measure(outside, phi, problem.coefficient, problem.noise)
    if m_dc <= 0:
        raise ValueError("domain complement carries no limit mass")
    ratios = {}
    for ts in test_sets:
        if theory.boundary_overlap_suspect(ts.predicate, phi,
                                           problem.coefficient, problem.noise):
            raise ValueError(f"test set {ts.name!r}: boundary carries limit mass")
        m_u = theory.limit_measure(lambda c: ts.predicate(c) and outside(c),
                                   phi, problem.coefficient, problem.noise)
        ratios[ts.name] = m_u / m_dc
    per_eps = []
    all_records = []
    for i, eps in enumerate(cfg.eps_grid):
        lam = theory.exit_rate(eps, phi, problem.coefficient, dom, problem.noise)
        ids = [i * cfg.trials + j for j in range(cfg.trials)]
        records, model_loci = _trial_records(problem, x0, eps, scales, cfg,
                                             lam, ids, collect_model_locus=True)
        all_records.extend(records)
        loci = [(r, ml) for r, ml in zip(records, model_loci) if not r.censored]
        counts = {ts.name: 0 for ts in test_sets}
        dists = []
        for r, ml in loci:
            for ts in test_sets:
                if ts.predicate(r.locus):
                    counts[ts.name] += 1
            dists.append(h_dist(r.locus, ml) ** lp_order)
        n_exit = len(loci)
        per_eps.append({
            "eps": eps,
            "n_exited": n_exit,
            "sets": [{
                "name": ts.name,
                "empirical": counts[ts.name] / n_exit if n_exit else None,
                "se": (math.sqrt(max(counts[ts.name], 1)) / n_exit
                       if n_exit else None),
                "theory": ratios[ts.name],
                "count": counts[ts.name],
            } for ts in test_sets],
            "lp_distance": float(np.mean(dists)) if dists else None,
            "lp_order": lp_order,
        })
    summary = {
        "kind": "locus",
        "preset": preset_name,
        "alpha": problem.noise.alpha,
        "eps_grid": cfg.eps_grid,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "per_eps": per_eps,
        "theory_ratios": ratios,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_records_csv(out_dir / "locus_records.csv", all_records,
                          problem.system.n_modes)
        (out_dir / "locus_summary.json").write_text(json.dumps(summary, indent=2))
    return {"summary": summary, "records": all_records}


# -- metastability -----------------------------------------------------------

def run_metastability(problem: ExitProblem, cfg: CampaignConfig,
                      scales: theory.ScaleParams, domains: Sequence[Domain],
                      stable_states: Sequence, rescaled_horizon: float = 48.0,
                      sample_interval: float = 0.05,
                      out_dir: Optional[Path] = None,
                      preset_name: Optional[str] = None) -> dict:
    """Occupancy and empirical generator of the basin-valued chain.

    Simulates the full dynamics to the rescaled horizon T / eps^alpha,
    classifies the basin at sampled rescaled times (cheap capture radius
    near the stable states, full flow classification otherwise) and turns
    transition counts and holding times into empirical rates, compared to
    the limit-measure generator.
    """
    from . import kernels
    from .noise import empty_segment, small_jump_increment
    from .solver import _kernel_args

    system = problem.system
    alpha = problem.noise.alpha
    gen_theory = theory.generator_matrix(stable_states, domains,
                                         problem.coefficient, problem.noise)
    states = [as_coeffs(fp.state) for fp in stable_states]
    capture = 0.25 * min(h_dist(states[i], states[j])
                         for i in range(len(states))
                         for j in range(len(states)) if i != j)

    def classify(c: np.ndarray) -> int:
        for idx, s in enumerate(states):
            if h_dist(c, s) < capture:
                return idx
        verdict = system.classify_basin(HilbertVector(c))
        for idx, fp in enumerate(stable_states):
            if fp.index == verdict:
                return idx
        return -1

    sol_cfg = cfg.solver_config()
    # post-jump transients of heavy-tailed multiplicative jumps are
    # legitimate large states; the stiffness-guarded integrator brings them
    # back, so only a far larger cap still flags genuine scheme misuse
    sol_cfg.blowup_cap = 1e12
    fcoef, fpcoef, has_f, gcode, gdir = _kernel_args(system, problem.coefficient)
    per_eps = []
    occupancy_series = []
    for i, eps in enumerate(cfg.eps_grid):
        horizon = rescaled_horizon / eps ** alpha
        dt_sample = sample_interval / eps ** alpha
        rho = scales.rho(eps)
        if eps > 0:
            delta_in, _ = inner_cutoff(problem.noise, rho,
                                       variance_target=cfg.small_jump_variance_target,
                                       rate_cap=cfg.small_jump_rate_cap)
        n_states = len(stable_states)
        time_in = np.zeros(n_states)
        transitions = np.zeros((n_states, n_states))
        occ_counts = None
        for j in range(cfg.trials):
            tid = i * cfg.trials + j
            rng_l = substream(cfg.seed, tid, CHANNEL_LARGE)
            rng_s = substream(cfg.seed, tid, CHANNEL_SMALL)
            stream = (LargeJumpStream(problem.noise, rho, rng_l)
                      if eps > 0 else None)
            c = np.array(states[j % n_states], dtype=float)
            cur = j % n_states
            t = 0.0
            k = 0
            samples = [cur]
            while t < horizon - 1e-9:
                t_next = min(t + dt_sample, horizon)
                # advance to the sampling time, applying stream jumps inside
                while t < t_next - 1e-12:
                    t_jump = stream.arrival(k + 1) if stream else np.inf
                    w_end = min(t_jump, t_next)
                    if w_end > t:
                        if eps > 0:
                            seg = small_jump_increment(problem.noise, rho,
                                                       delta_in, t, w_end, rng_s)
                        else:
                            seg = empty_segment(system.n_modes, t, w_end)
                        sigma = np.full(2, -1.0)
                        drift = np.asarray(seg.drift, dtype=float)
                        has_drift = bool(np.any(drift != 0.0)) and eps > 0
                        status, _, _ = kernels.integrate_window(
                            c, np.zeros_like(c), np.zeros_like(c), t, w_end,
                            sol_cfg.dt, system.lam, system.synth, system.anal,
                            fcoef, fpcoef, has_f, gcode, gdir, eps,
                            np.asarray(seg.times, dtype=float),
                            np.asarray(seg.marks, dtype=float).reshape(-1, system.n_modes),
                            drift, has_drift,
                            kernels.MODE_PLAIN, np.zeros_like(c), np.inf,
                            False, False, np.zeros(1), 0.0, np.inf,
                            sol_cfg.blowup_cap, False, sol_cfg.refine_tol, sigma)
                        if status == kernels.STATUS_BLOWUP:
                            raise RuntimeError("blow-up during metastability run")
                        t = w_end
                    if stream and t_jump <= t_next:
                        from .coefficient import apply_c
                        c += apply_c(problem.coefficient, c, eps * stream.mark(k + 1))
                        k += 1
                        t = t_jump
                nxt = classify(c)
                if nxt >= 0 and cur >= 0:
                    # consecutive samples are sample_interval apart in
                    # rescaled time; attribute the interval to the old state
                    time_in[cur] += sample_interval
                    if nxt != cur:
                        transitions[cur, nxt] += 1
                cur = nxt if nxt >= 0 else cur
                samples.append(cur)
            if occ_counts is None:
                occ_counts = np.zeros((len(samples), n_states))
            for s_i, s in enumerate(samples[:occ_counts.shape[0]]):
                if s >= 0:
                    occ_counts[s_i, s] += 1
        time_rescaled = time_in
        rates = np.zeros((n_states, n_states))
        for a in range(n_states):
            for b in range(n_states):
                if a != b and time_rescaled[a] > 0:
                    rates[a, b] = transitions[a, b] / time_rescaled[a]
        occupancy = (occ_counts / np.maximum(occ_counts.sum(axis=1, keepdims=True), 1))
        per_eps.append({
            "eps": eps,
            "transitions": transitions.tolist(),
            "time_in_rescaled": time_rescaled.tolist(),
            "rates": rates.tolist(),
            "occupancy_fraction": (occ_counts.sum(axis=0)
                                   / max(occ_counts.sum(), 1)).tolist(),
        })
        occupancy_series.append({
            "eps": eps,
            "t_rescaled": (np.arange(occupancy.shape[0]) * sample_interval).tolist(),
            "fractions": occupancy.tolist(),
        })
    summary = {
        "kind": "metastable",
        "preset": preset_name,
        "alpha": alpha,
        "eps_grid": cfg.eps_grid,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "rescaled_horizon": rescaled_horizon,
        "sample_interval": sample_interval,
        "generator_theory": gen_theory.tolist(),
        "stationary_theory": stationary_distribution(gen_theory).tolist(),
        "per_eps": per_eps,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metastable_summary.json").write_text(json.dumps(summary, indent=2))
        _write_occupancy_csv(out_dir / "metastable_occupancy.csv",
                             occupancy_series[-1])
    return {"summary": summary, "occupancy_series": occupancy_series}


def stationary_distribution(generator: np.ndarray) -> np.ndarray:
    """Left null vector of the generator, normalized to a distribution."""
    g = np.asarray(generator, dtype=float)
    w, v = np.linalg.eig(g.T)
    idx = int(np.argmin(np.abs(w)))
    pi = np.real(v[:, idx])
    pi = np.abs(pi)
    return pi / pi.sum()


def _write_occupancy_csv(path, series: dict):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        n_states = len(series["fractions"][0])
        w.writerow(["t_rescaled"] + [f"fraction_state{i}" for i in range(n_states)])
        for t, fr in zip(series["t_rescaled"], series["fractions"]):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in fr])


# -- exact-law model checks ---------------------------------------------------

def run_models_check(problem: ExitProblem, eps: float, scales: theory.ScaleParams,
                     n_streams: int, seed: int,
                     significance: float = 0.01) -> dict:
    """Exact-law tests for the single-jump exit models.

    Draws independent streams, builds the model on each and tests the
    normalized arrival time against Exp(1) (KS) and the success index
    against Geometric(lambda/beta) (chi-square).  These laws are exact for
    every epsilon; failures indicate implementation bugs, not asymptotics.
    """
    phi = problem.domain.stable_state
    rho = scales.rho(eps)
    lam = theory.exit_rate(eps, phi, problem.coefficient, problem.domain,
                           problem.noise)
    beta = problem.noise.tail_mass(rho)
    p = lam / beta
    ks_samples = np.empty(n_streams)
    k_samples = np.empty(n_streams, dtype=np.int64)
    for i in range(n_streams):
        stream = LargeJumpStream(problem.noise, rho,
                                 substream(seed, i, CHANNEL_LARGE))
        outcome = build_model(stream, eps, phi, problem.coefficient,
                              problem.domain, lam)
        ks_samples[i] = outcome.scaled_time
        k_samples[i] = outcome.jump_index
    ks_d, ks_p = ks_statistic(ks_samples, exp1_cdf)
    edges, expected = geometric_bins(n_streams, p)
    counts = np.zeros(len(edges) + 1)
    for j, k_edge in enumerate(edges):
        counts[j] = np.sum(k_samples == k_edge)
    counts[len(edges)] = np.sum(k_samples > edges[-1])
    chi_stat, chi_p = chi_square(counts, expected)
    return {
        "kind": "models_check",
        "eps": eps, "n_streams": n_streams,
        "lambda": lam, "beta": beta, "success_probability": p,
        "mean_K": float(np.mean(k_samples)), "expected_mean_K": 1.0 / p,
        "mean_K_se": float(np.std(k_samples, ddof=1) / np.sqrt(n_streams)),
        "mean_scaled_time": float(np.mean(ks_samples)),
        "mean_scaled_time_se": float(np.std(ks_samples, ddof=1)
                                     / np.sqrt(n_streams)),
        "ks_stat": ks_d, "ks_p": ks_p,
        "chi_square_stat": chi_stat,
        "chi_square_p": chi_p,
        "significance": significance,
        "ks_pass": ks_p > significance,
        "chi_square_pass": chi_p > significance,
    }


# -- deviation probe -----------------------------------------------------------

def run_probe_campaign(problem: ExitProblem, x0, eps_grid: Sequence[float],
                       scales: theory.ScaleParams, replications: int,
                       seed: int, solver_cfg: SolverConfig,
                       rate_cap: float = 1000.0) -> dict:
    rows = []
    for i, eps in enumerate(eps_grid):
        res = small_deviation_probe(problem, x0, eps, scales, seed,
                                    replications, solver_cfg,
                                    rate_cap=rate_cap,
                                    trial_offset=i * replications)
        frac = res.exceed_fraction
        rows.append({
            "eps": eps, "gamma": res.gamma, "threshold": res.threshold,
            "exceed_fraction": frac,
            "se": math.sqrt(max(frac * (1 - frac), 1.0 / replications)
                            / replications),
            "sigma1_fraction": res.sigma1_fraction,
            "sigma2_fraction": res.sigma2_fraction,
            "dropped_second_moment": res.dropped_second_moment,
        })
    return {"kind": "probe", "replications": replications, "per_eps": rows}
