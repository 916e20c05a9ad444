"""Command line surface: every experiment runs from one JSON config.

Subcommands map one-to-one onto the campaign layer; each run writes its
outputs plus a manifest (command, config, resolved seed, version,
timestamps) into the output directory, and identical (config, seed) pairs
reproduce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, theory
from .config import (ConfigError, build_campaign, build_problem,
                     build_test_sets, load_config)
from .experiments import (run_exit_campaign, run_locus_campaign,
                          run_metastability, run_models_check,
                          run_probe_campaign)
from .solver import SolverConfig
from .spectral import BASIN, Domain, as_coeffs


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(out_dir: Path, command: str, config_path: str,
                    doc: dict, seed: int, started: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_path": str(config_path),
        "preset": doc.get("preset"),
        "resolved_seed": seed,
        "tool_version": __version__,
        "started_at": started,
        "finished_at": _now(),
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2))


def _write_json(out_dir: Path, name: str, payload: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(json.dumps(payload, indent=2))


def _resolve_out_dir(args, doc: dict) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    return Path(doc.get("out_dir", "runs/latest"))


def _seed(args, doc: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(doc.get("seed", 0))


def _basin_domains(problem, doc: dict):
    """One full-basin domain per stable state, for the metastable chain.

    The chain targets take the level-set cap to its vanishing limit
    (R = inf): jumps landing far out still relax into a basin, and with a
    finite cap that mass would be unassigned and unbalance the generator.
    """
    stable = problem.system.stable_states()
    domains = []
    for fp in stable:
        domains.append(Domain(problem.system, BASIN, fp.state,
                              R=np.inf, delta=0.0,
                              level=1, basin_index=fp.index))
    return stable, domains


def cmd_theory(args, doc):
    problem, scales = build_problem(doc)
    campaign = build_campaign(doc, seed_override=args.seed)
    summary = theory.theory_summary(campaign.eps_grid,
                                    problem.domain.stable_state,
                                    problem.coefficient, problem.domain,
                                    problem.noise, scales)
    if doc.get("locus", {}).get("test_sets"):
        phi = problem.domain.stable_state
        summary["m_values"] = {
            ts.name: theory.limit_measure(ts.predicate, phi,
                                          problem.coefficient, problem.noise)
            for ts in build_test_sets(doc, problem)}
    if doc.get("domain", {}).get("kind") == BASIN:
        stable, domains = _basin_domains(problem, doc)
        if len(stable) >= 2:
            gen = theory.generator_matrix(stable, domains,
                                          problem.coefficient, problem.noise)
            summary["generator"] = gen.tolist()
    out_dir = _resolve_out_dir(args, doc)
    _write_json(out_dir, "theory_summary.json", summary)
    print(json.dumps({"written": str(out_dir / "theory_summary.json"),
                      "lambda_grid": [row["lambda"] for row in summary["per_eps"]]}))
    return out_dir


def cmd_exit(args, doc):
    problem, scales = build_problem(doc)
    campaign = build_campaign(doc, seed_override=args.seed)
    out_dir = _resolve_out_dir(args, doc)
    result = run_exit_campaign(problem, problem.domain.stable_state, campaign,
                               scales, out_dir=out_dir,
                               threads=max(1, args.threads),
                               preset_name=doc.get("preset"))
    s = result["summary"]
    print(json.dumps({"slope": s["slope"], "valid": s["valid"],
                      "mean_normalized": [row["mean_tau_normalized"]
                                          for row in s["per_eps"]]}))
    return out_dir


def cmd_locus(args, doc):
    problem, scales = build_problem(doc)
    campaign = build_campaign(doc, seed_override=args.seed)
    test_sets = build_test_sets(doc, problem)
    lp = float(doc.get("locus", {}).get("lp_order", 1.0))
    out_dir = _resolve_out_dir(args, doc)
    result = run_locus_campaign(problem, problem.domain.stable_state, campaign,
                                scales, test_sets, lp_order=lp, out_dir=out_dir,
                                preset_name=doc.get("preset"))
    print(json.dumps({"theory_ratios": result["summary"]["theory_ratios"],
                      "lp_distances": [row["lp_distance"]
                                       for row in result["summary"]["per_eps"]]}))
    return out_dir


def cmd_metastable(args, doc):
    problem, scales = build_problem(doc)
    campaign = build_campaign(doc, seed_override=args.seed)
    meta = doc.get("metastable", {})
    stable, domains = _basin_domains(problem, doc)
    out_dir = _resolve_out_dir(args, doc)
    result = run_metastability(
        problem, campaign, scales, domains, stable,
        rescaled_horizon=float(meta.get("rescaled_horizon", 24.0)),
        sample_interval=float(meta.get("sample_interval", 0.05)),
        out_dir=out_dir, preset_name=doc.get("preset"))
    last = result["summary"]["per_eps"][-1]
    print(json.dumps({"rates": last["rates"],
                      "generator_theory": result["summary"]["generator_theory"]}))
    return out_dir


def cmd_models_check(args, doc):
    problem, scales = build_problem(doc)
    seed = _seed(args, doc)
    models_doc = doc.get("models_check", {})
    eps = float(models_doc.get("eps", doc["campaign"]["eps_grid"][0]))
    n_streams = int(models_doc.get("streams", 100000))
    report = run_models_check(problem, eps, scales, n_streams, seed)
    out_dir = _resolve_out_dir(args, doc)
    _write_json(out_dir, "models_check.json", report)
    print(json.dumps({"ks_p": report["ks_p"], "chi_square_p": report["chi_square_p"],
                      "ks_pass": report["ks_pass"],
                      "chi_square_pass": report["chi_square_pass"]}))
    return out_dir


def cmd_deterministic(args, doc):
    problem, scales = build_problem(doc)
    system = problem.system
    fps = system.fixed_points()
    report = {
        "kind": "deterministic",
        "n_modes": system.n_modes,
        "fixed_points": [{
            "coeffs": as_coeffs(fp.state).tolist(),
            "stable": fp.stable,
            "index": fp.index,
            "residual": fp.residual,
            "top_eigenvalue": fp.top_eigenvalue,
        } for fp in fps],
        "n_stable": len(system.stable_states()),
    }
    det = doc.get("deterministic", {})
    gammas = det.get("kappa0_gammas", [1e-1, 1e-2, 1e-3, 1e-4])
    report["kappa0_estimate"] = system.estimate_kappa0(
        problem.domain, gammas, n_samples=int(det.get("kappa0_samples", 4)))
    if problem.domain.kind == "ball":
        report["inward_pointing_margin"] = problem.domain.inward_pointing_margin()
    out_dir = _resolve_out_dir(args, doc)
    _write_json(out_dir, "deterministic_report.json", report)
    print(json.dumps({"n_fixed_points": len(fps),
                      "kappa0": report["kappa0_estimate"]}))
    return out_dir


def cmd_validate(args, doc):
    from .coefficient import linear_bound_report, lipschitz_estimate
    problem, scales = build_problem(doc)
    val = doc.get("validate", {})
    budget = int(val.get("budget", 2000))
    rng = np.random.default_rng(_seed(args, doc))
    report = {
        "kind": "validate",
        "coefficient": problem.coefficient.kind,
        "linear_bound": linear_bound_report(
            problem.coefficient, problem.system, problem.domain.R,
            budget=budget, rng=rng),
        "lipschitz": lipschitz_estimate(
            problem.coefficient, problem.system.n_modes, budget=budget, rng=rng),
    }
    out_dir = _resolve_out_dir(args, doc)
    _write_json(out_dir, "coefficient_report.json", report)
    print(json.dumps({"linear_bound_passed": report["linear_bound"]["passed"],
                      "k2": report["lipschitz"]["k2_estimate"]}))
    return out_dir


def cmd_probe(args, doc):
    problem, scales = build_problem(doc)
    probe_doc = doc.get("probe", {})
    eps_grid = probe_doc.get("eps_grid", doc["campaign"]["eps_grid"])
    reps = int(probe_doc.get("replications", 1000))
    rate_cap = float(probe_doc.get("rate_cap", 1000.0))
    sol = SolverConfig(dt=float(doc.get("campaign", {}).get("dt", 1e-2)),
                       track_convolution=True,
                       levelset_R=problem.domain.R)
    report = run_probe_campaign(problem, problem.domain.stable_state, eps_grid,
                                scales, reps, _seed(args, doc), sol,
                                rate_cap=rate_cap)
    out_dir = _resolve_out_dir(args, doc)
    _write_json(out_dir, "probe_report.json", report)
    print(json.dumps({"exceed_fractions": [r["exceed_fraction"]
                                           for r in report["per_eps"]]}))
    return out_dir


COMMANDS = {
    "theory": cmd_theory,
    "exit": cmd_exit,
    "locus": cmd_locus,
    "metastable": cmd_metastable,
    "models-check": cmd_models_check,
    "deterministic": cmd_deterministic,
    "validate": cmd_validate,
    "probe": cmd_probe,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exitlab",
        description="Monte Carlo laboratory for heavy-tailed first-exit asymptotics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes for trial dispatch")
        p.add_argument("--out-dir", default=None,
                       help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    started = _now()
    try:
        doc = load_config(args.config)
        if args.seed is not None:
            doc["seed"] = int(args.seed)
        out_dir = COMMANDS[args.command](args, doc)
        _write_manifest(out_dir, args.command, args.config, doc,
                        _seed(args, doc), started)
    except ConfigError as e:
        print(json.dumps({"error": e.code, "detail": e.detail}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
