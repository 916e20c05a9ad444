"""Multiplicative noise coefficients G: H x H -> H and their validation.

Three presets: additive G(x,z) = z, norm-multiplicative G(x,z) = ||x|| z,
and the rank-one map G(x,z) = <<x - v, z>> v.  All three are linear in the
jump argument, which the solver exploits when it applies the compensator
drift through G.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import (HilbertVector, ReactionDiffusion, as_coeffs,
                       eigenvalues, h_norm)

ADDITIVE = "additive"
NORM_MULT = "norm_multiplicative"
RANK_ONE = "rank_one"

KIND_CODES = {ADDITIVE: 0, NORM_MULT: 1, RANK_ONE: 2}


@dataclass(frozen=True, eq=False)
class CoefficientSpec:
    kind: str
    direction: Optional[np.ndarray] = None  # unit H-norm, rank_one only

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == RANK_ONE:
            if self.direction is None:
                raise ValueError("rank_one coefficient needs a direction")
            d = as_coeffs(self.direction)
            if abs(h_norm(d) - 1.0) > 1e-8:
                raise ValueError("rank_one direction must have unit H-norm")
            object.__setattr__(self, "direction", d)
        elif self.direction is not None:
            raise ValueError(f"{self.kind} coefficient takes no direction")

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def direction_or_zeros(self, n_modes: int) -> np.ndarray:
        if self.direction is None:
            return np.zeros(n_modes)
        return self.direction


def apply_c(spec: CoefficientSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """G(x, z) on raw coefficient arrays."""
    if spec.kind == ADDITIVE:
        return np.array(z, dtype=float)
    if spec.kind == NORM_MULT:
        return h_norm(x) * np.asarray(z, dtype=float)
    lam = eigenvalues(len(x))
    s = float(np.sum(lam * (np.asarray(x) - spec.direction) * np.asarray(z)))
    return s * spec.direction


def apply(spec: CoefficientSpec, x, z) -> HilbertVector:
    return HilbertVector(apply_c(spec, as_coeffs(x), as_coeffs(z)))


def _sample_level_set(system: ReactionDiffusion, R: float, rng,
                      n: int) -> np.ndarray:
    """Points of the potential level set U^R, drawn by rejection in a ball."""
    dstar = system.level_threshold(R)
    out = np.empty((n, system.n_modes))
    k = 0
    tries = 0
    while k < n:
        tries += 1
        if tries > 400 * n:
            raise RuntimeError("level-set sampling stalled; check R")
        d = rng.standard_normal(system.n_modes)
        d /= h_norm(d)
        c = rng.uniform(0.0, R) * d
        if system.potential(c) <= dstar:
            out[k] = c
            k += 1
    return out


def linear_bound_report(spec: CoefficientSpec, system: ReactionDiffusion,
                        R: float, budget: int = 2000,
                        rng: Optional[np.random.Generator] = None,
                        bins: int = 10, lipschitz_tol: float = 0.05) -> dict:
    """Sampled profile of sup ||G(y,z)|| / ||z|| over the level set U^R.

    Bins the samples by ||y||, reports the per-bin supremum of the bound
    ratio and checks that the profile is finite and Lipschitz in y within
    the sampled tolerance (the linear-growth hypothesis on G).
    """
    if budget < 1000:
        raise ValueError("budget must be at least 1000 sample pairs")
    rng = rng or np.random.default_rng(0)
    ys = _sample_level_set(system, R, rng, budget)
    zs = rng.standard_normal((budget, system.n_modes))
    zs /= np.array([h_norm(z) for z in zs])[:, None]
    ratios = np.array([h_norm(apply_c(spec, y, z)) for y, z in zip(ys, zs)])
    ynorms = np.array([h_norm(y) for y in ys])
    edges = np.linspace(0.0, float(np.max(ynorms)) + 1e-12, bins + 1)
    centers, sups = [], []
    for i in range(bins):
        m = (ynorms >= edges[i]) & (ynorms < edges[i + 1])
        if not np.any(m):
            continue
        centers.append(0.5 * (edges[i] + edges[i + 1]))
        sups.append(float(np.max(ratios[m])))
    centers = np.asarray(centers)
    sups = np.asarray(sups)
    finite = bool(np.all(np.isfinite(sups)))
    # Lipschitz-in-y trend of the binned profile; a regression slope is
    # robust to per-bin sampling noise in the suprema
    a = np.vstack([centers, np.ones_like(centers)]).T
    slope = float(np.linalg.lstsq(a, sups, rcond=None)[0][0])
    passed = finite and abs(slope) <= _profile_lipschitz_bound(spec) + lipschitz_tol
    return {
        "bin_centers": centers.tolist(),
        "bin_sup_ratio": sups.tolist(),
        "profile_slope": slope,
        "finite": finite,
        "passed": bool(passed),
        "n_samples": budget,
    }


def _profile_lipschitz_bound(spec: CoefficientSpec) -> float:
    # analytic Lipschitz constants of the exact G_1 profiles
    if spec.kind == ADDITIVE:
        return 0.0
    return 1.0  # |y| and ||y - v|| are both 1-Lipschitz in y


def lipschitz_estimate(spec: CoefficientSpec, n_modes: int, budget: int = 2000,
                       rng: Optional[np.random.Generator] = None,
                       x_scale: float = 3.0) -> dict:
    """Sampled constant K2 with ||G(x1,z)-G(x2,z)|| <= K2 ||x1-x2||, ||z|| <= 1.

    The norm-multiplicative preset only satisfies the bound per jump scale
    (the ratio grows linearly in ||z||), so it is flagged and the samples
    are restricted to the unit ball in z, matching how the hypothesis is
    consumed for small jumps.
    """
    rng = rng or np.random.default_rng(1)
    worst = 0.0
    for _ in range(budget):
        x1 = x_scale * rng.standard_normal(n_modes)
        x2 = x_scale * rng.standard_normal(n_modes)
        z = rng.standard_normal(n_modes)
        z *= rng.uniform(0.0, 1.0) / h_norm(z)
        denom = h_norm(x1 - x2)
        if denom < 1e-12:
            continue
        worst = max(worst, h_norm(apply_c(spec, x1, z) - apply_c(spec, x2, z)) / denom)
    return {
        "k2_estimate": float(worst),
        "scale_dependent": spec.kind == NORM_MULT,
        "z_cap": 1.0,
        "n_samples": budget,
    }
