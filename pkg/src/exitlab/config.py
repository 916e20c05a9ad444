"""Config file schema: one versioned JSON document per experiment.

A config names a preset and optionally overrides any of its sections.
``build_problem`` turns the merged document into live objects (system,
noise, coefficient, domain) and resolves the scale exponents.  Validation
failures raise ConfigError with a short machine-readable code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import presets as presets_mod
from .coefficient import CoefficientSpec
from .experiments import CampaignConfig, TestSet
from .noise import LevyMeasureSpec
from .solver import ExitProblem
from .spectral import (BALL, BASIN, Domain, HilbertVector, NonlinearitySpec,
                       ReactionDiffusion, eigenvalues, h_norm)
from .theory import ScaleParams, choose_scales

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Schema violation; ``code`` is the stable machine-readable tag."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError("config_not_found", str(p))
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError("config_invalid_json", str(e))
    if not isinstance(doc, dict):
        raise ConfigError("config_not_object", "top level must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("config_bad_version",
                          f"schema_version {version} unsupported (expected {SCHEMA_VERSION})")
    return resolve_preset(doc)


def resolve_preset(doc: dict) -> dict:
    name = doc.get("preset")
    if name is None:
        merged = {}
    else:
        try:
            merged = presets_mod.preset(name)
        except KeyError as e:
            raise ConfigError("unknown_preset", str(e))
    merged = _deep_merge(merged, {k: v for k, v in doc.items()
                                  if k not in ("preset",)})
    merged["preset"] = name
    return merged


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _direction_from(entry, n_modes: int) -> np.ndarray:
    """Unit-H direction from {'mode': k, 'sign': s} or explicit coefficients."""
    if isinstance(entry, dict) and "mode" in entry:
        k = int(entry["mode"])
        if not 1 <= k <= n_modes:
            raise ConfigError("bad_atom_mode", f"mode {k} outside 1..{n_modes}")
        c = np.zeros(n_modes)
        c[k - 1] = float(entry.get("sign", 1))
    else:
        coeffs = entry["coeffs"] if isinstance(entry, dict) else entry
        c = np.asarray(list(coeffs), dtype=float)
        if c.size != n_modes:
            raise ConfigError("bad_direction_length",
                              f"expected {n_modes} coefficients, got {c.size}")
    n = h_norm(c)
    if n == 0:
        raise ConfigError("zero_direction", "atom direction cannot vanish")
    return c / n


def build_system(doc: dict) -> ReactionDiffusion:
    sys_doc = doc.get("system")
    if not sys_doc:
        raise ConfigError("missing_section", "system")
    nl_doc = sys_doc.get("nonlinearity", {"kind": "zero"})
    kind = nl_doc.get("kind", "zero")
    try:
        if kind == "zero":
            nl = NonlinearitySpec.zero_reaction()
        elif kind == "chafee_infante":
            nl = NonlinearitySpec.chafee_infante(float(nl_doc["a"]))
        elif kind == "polynomial":
            nl = NonlinearitySpec(kind="polynomial",
                                  coeffs=tuple(nl_doc["coeffs"]))
        else:
            raise ConfigError("bad_nonlinearity", f"unknown kind {kind!r}")
    except (KeyError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("bad_nonlinearity", str(e))
    n_modes = int(sys_doc.get("n_modes", 16))
    return ReactionDiffusion(nl, n_modes=n_modes)


def build_noise(doc: dict, n_modes: int) -> LevyMeasureSpec:
    noise_doc = doc.get("noise")
    if not noise_doc:
        raise ConfigError("missing_section", "noise")
    try:
        atoms = noise_doc["atoms"]
        dirs = np.array([_direction_from(a, n_modes) for a in atoms])
        weights = np.array([float(a["weight"]) for a in atoms])
        return LevyMeasureSpec(alpha=float(noise_doc["alpha"]),
                               directions=dirs, weights=weights,
                               slowly_varying=noise_doc.get("slowly_varying",
                                                            "constant"))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("bad_noise", str(e))


def build_coefficient(doc: dict, n_modes: int) -> CoefficientSpec:
    coeff_doc = doc.get("coefficient")
    if not coeff_doc:
        raise ConfigError("missing_section", "coefficient")
    kind = coeff_doc.get("kind")
    try:
        if kind == "rank_one":
            return CoefficientSpec(
                kind=kind,
                direction=_direction_from(coeff_doc["direction"], n_modes))
        return CoefficientSpec(kind=kind)
    except ConfigError:
        raise
    except (KeyError, ValueError) as e:
        raise ConfigError("bad_coefficient", str(e))


def _resolve_center(center, system: ReactionDiffusion):
    """'origin', 'stable:i' (i-th stable state by mode-1 rank) or coefficients."""
    if center == "origin":
        return HilbertVector.zero(system.n_modes), None
    if isinstance(center, str) and center.startswith("stable:"):
        rank = int(center.split(":", 1)[1])
        stable = system.stable_states()
        if rank >= len(stable):
            raise ConfigError("bad_domain_center",
                              f"stable state rank {rank} out of range ({len(stable)})")
        return stable[rank].state, stable[rank].index
    c = np.asarray(list(center), dtype=float)
    if c.size != system.n_modes:
        raise ConfigError("bad_domain_center", "coefficient count mismatch")
    return HilbertVector(c), None


def build_domain(doc: dict, system: ReactionDiffusion) -> Domain:
    dom_doc = doc.get("domain")
    if not dom_doc:
        raise ConfigError("missing_section", "domain")
    kind = dom_doc.get("kind")
    if kind not in (BALL, BASIN):
        raise ConfigError("bad_domain", f"unknown kind {kind!r}")
    center, basin_index = _resolve_center(dom_doc.get("center", "origin"), system)
    try:
        return Domain(system, kind, center,
                      R=float(dom_doc["R"]),
                      delta=float(dom_doc.get("delta", 0.0)),
                      level=int(dom_doc.get("level", 2)),
                      radius=(float(dom_doc["radius"]) if kind == BALL else None),
                      basin_index=basin_index)
    except (KeyError, ValueError) as e:
        raise ConfigError("bad_domain", str(e))


def build_scales(doc: dict, alpha: float) -> ScaleParams:
    sc = doc.get("scales", {"mode": "auto"})
    try:
        if sc == "auto" or sc.get("mode", "explicit") == "auto":
            q = float(sc.get("q", 1.0)) if isinstance(sc, dict) else 1.0
            margin = float(sc.get("margin", 0.8)) if isinstance(sc, dict) else 0.8
            return choose_scales(alpha, q=q, margin=margin)
        return ScaleParams(gamma_star=float(sc["gamma_star"]),
                           rho_star=float(sc["rho_star"]),
                           theta_star=2.0 * alpha * float(sc["rho_star"]),
                           q=float(sc.get("q", 1.0)), alpha=alpha)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("infeasible_scales", str(e))


def build_campaign(doc: dict, seed_override: Optional[int] = None) -> CampaignConfig:
    camp = doc.get("campaign")
    if not camp:
        raise ConfigError("missing_section", "campaign")
    seed = seed_override if seed_override is not None else doc.get("seed", 0)
    try:
        return CampaignConfig(
            eps_grid=list(camp["eps_grid"]),
            trials=int(camp["trials"]),
            seed=int(seed),
            dt=float(camp.get("dt", 1e-2)),
            horizon_factor=float(camp.get("horizon_factor", 20.0)),
            refine_exit=bool(camp.get("refine_exit", False)),
            small_jump_rate_cap=float(camp.get("small_jump_rate_cap", 100.0)),
            small_jump_variance_target=float(
                camp.get("small_jump_variance_target", 1e-6)),
            significance=float(camp.get("significance", 0.01)),
            se_band=float(camp.get("se_band", 3.0)),
            max_censoring=float(camp.get("max_censoring", 0.20)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("bad_campaign", str(e))


def build_problem(doc: dict):
    """Live objects for a merged config: (problem, scales, campaign-less extras)."""
    system = build_system(doc)
    noise = build_noise(doc, system.n_modes)
    coefficient = build_coefficient(doc, system.n_modes)
    domain = build_domain(doc, system)
    scales = build_scales(doc, noise.alpha)
    problem = ExitProblem(system=system, coefficient=coefficient,
                          noise=noise, domain=domain)
    return problem, scales


def build_test_sets(doc: dict, problem: ExitProblem) -> list:
    locus_doc = doc.get("locus", {})
    sets_doc = locus_doc.get("test_sets")
    if not sets_doc:
        raise ConfigError("missing_section", "locus.test_sets")
    out = []
    for entry in sets_doc:
        out.append(_make_test_set(entry, problem))
    return out


def _make_test_set(entry: dict, problem: ExitProblem) -> TestSet:
    kind = entry.get("kind")
    name = entry.get("name", kind)
    n = problem.system.n_modes
    lam = eigenvalues(n)
    if kind == "halfspace_shift":
        # {x : <<x - s v, s v>> > 0}, the shifted half space along the
        # rank-one direction (or the first noise atom for other coefficients)
        sign = float(entry.get("sign", 1))
        if problem.coefficient.direction is not None:
            v = problem.coefficient.direction
        else:
            v = problem.noise.directions[0]
        sv = sign * v

        def pred(c, sv=sv, lam=lam):
            return float(np.sum(lam * (np.asarray(c) - sv) * sv)) > 0.0

        return TestSet(name=name, predicate=pred)
    if kind == "norm_above":
        value = float(entry["value"])

        def pred(c, value=value, lam=lam):
            return float(np.sqrt(np.sum(lam * np.asarray(c) ** 2))) > value

        return TestSet(name=name, predicate=pred)
    if kind == "ball":
        center = np.asarray(list(entry["center"]), dtype=float)
        radius = float(entry["radius"])

        def pred(c, center=center, radius=radius, lam=lam):
            d = np.asarray(c) - center
            return float(np.sqrt(np.sum(lam * d * d))) <= radius

        return TestSet(name=name, predicate=pred)
    if kind == "inside_domain":
        dom = problem.domain

        def pred(c, dom=dom):
            return dom.contains(c, level=1)

        return TestSet(name=name, predicate=pred)
    raise ConfigError("bad_test_set", f"unknown kind {kind!r}")
