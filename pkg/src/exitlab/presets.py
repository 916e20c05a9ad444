"""Built-in experiment presets (named config blocks shipped with the tool)."""

from __future__ import annotations

import copy

import numpy as np

_CI_A = 2.0 * np.pi ** 2


PRESETS = {
    # linear heat, one mode, additive jumps: every theory quantity has a
    # closed form, which makes this the reference preset for the exit-law
    # and coupling experiments
    "single_mode_oracle": {
        "system": {"nonlinearity": {"kind": "zero"}, "n_modes": 1},
        "noise": {
            "alpha": 1.5,
            "atoms": [
                {"mode": 1, "sign": 1, "weight": 0.5},
                {"mode": 1, "sign": -1, "weight": 0.5},
            ],
            "slowly_varying": "constant",
        },
        "coefficient": {"kind": "additive"},
        "domain": {"kind": "ball", "center": "origin", "radius": 1.0,
                   "R": 2.0, "delta": 0.005, "level": 2},
        "scales": {"mode": "auto", "q": 1.0, "margin": 0.8},
        "campaign": {
            "eps_grid": [0.1, 0.05, 0.025],
            "trials": 2000,
            "dt": 0.01,
            "horizon_factor": 20.0,
            "small_jump_rate_cap": 100.0,
        },
    },
    # same dynamics at desk-scale resolution
    "linear_heat_additive": {
        "system": {"nonlinearity": {"kind": "zero"}, "n_modes": 8},
        "noise": {
            "alpha": 1.5,
            "atoms": [
                {"mode": 1, "sign": 1, "weight": 0.5},
                {"mode": 1, "sign": -1, "weight": 0.5},
            ],
            "slowly_varying": "constant",
        },
        "coefficient": {"kind": "additive"},
        "domain": {"kind": "ball", "center": "origin", "radius": 1.0,
                   "R": 2.0, "delta": 0.005, "level": 2},
        "scales": {"mode": "auto", "q": 1.0, "margin": 0.8},
        "campaign": {
            "eps_grid": [0.1, 0.05, 0.025],
            "trials": 2000,
            "dt": 0.01,
            "small_jump_rate_cap": 100.0,
        },
    },
    # rank-one multiplicative coefficient: exits happen along the fixed
    # direction, the locus law splits evenly between the two half spaces
    "linear_heat_rank_one": {
        "system": {"nonlinearity": {"kind": "zero"}, "n_modes": 8},
        "noise": {
            "alpha": 1.5,
            "atoms": [
                {"mode": 1, "sign": 1, "weight": 0.5},
                {"mode": 1, "sign": -1, "weight": 0.5},
            ],
            "slowly_varying": "constant",
        },
        "coefficient": {"kind": "rank_one", "direction": {"mode": 1}},
        "domain": {"kind": "ball", "center": "origin", "radius": 1.0,
                   "R": 2.0, "delta": 0.005, "level": 2},
        "scales": {"mode": "auto", "q": 1.0, "margin": 0.8},
        "campaign": {
            "eps_grid": [0.1, 0.05, 0.025],
            "trials": 2000,
            "dt": 0.01,
            "small_jump_rate_cap": 100.0,
        },
        "locus": {
            "lp_order": 1.0,
            "test_sets": [
                {"name": "half_plus", "kind": "halfspace_shift", "sign": 1},
                {"name": "half_minus", "kind": "halfspace_shift", "sign": -1},
            ],
        },
    },
    # bistable reaction with norm-multiplicative noise: two stable states,
    # used for the deviation probe and the metastable chain reduction
    "chafee_infante_mult": {
        "system": {"nonlinearity": {"kind": "chafee_infante", "a": _CI_A},
                   "n_modes": 8},
        "noise": {
            "alpha": 1.5,
            "atoms": [
                {"mode": 1, "sign": 1, "weight": 0.5},
                {"mode": 1, "sign": -1, "weight": 0.5},
            ],
            "slowly_varying": "constant",
        },
        "coefficient": {"kind": "norm_multiplicative"},
        "domain": {"kind": "basin", "center": "stable:0", "R": 6.0,
                   "delta": 0.05, "level": 2},
        "scales": {"mode": "auto", "q": 1.0, "margin": 0.8},
        "campaign": {
            "eps_grid": [0.1, 0.05],
            "trials": 100,
            "dt": 0.01,
            "small_jump_rate_cap": 50.0,
        },
        "probe": {
            "eps_grid": [0.2, 0.1, 0.05],
            "replications": 1000,
            "rate_cap": 1000.0,
        },
        "metastable": {
            "rescaled_horizon": 24.0,
            "sample_interval": 0.05,
        },
    },
}


def available_presets():
    return sorted(PRESETS)


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(available_presets())}")
    return copy.deepcopy(PRESETS[name])
