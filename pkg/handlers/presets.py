"""Named experiment presets.

The `-desk` variants are scaled down to run on a laptop in minutes; the
`-paper` variants use the full dimensions of the published study.
"""
import copy

import config
from config import ConfigError

# Estimation runs take four times the worst-case step 1 / (4 kappa phi_max);
# the bandit and BwK presets keep the default.
ESTIMATION_STEP_SCALE = 4.0

_ESTIMATION_POLICY = {
    "propensity_modes": ["full", "decay"],
    "p_scale": 1.0,
    "step_scale": ESTIMATION_STEP_SCALE,
    "lasso_cs": list(config.LASSO_C_GRID),
}

_BANDIT_POLICY = {
    "eps_scale": 1.0,
    "greedy": True,
    "etc_fractions": list(config.ETC_FRACTIONS),
    "lasso_cs": list(config.LASSO_C_GRID),
}

_BWK_POLICY = {
    "modes": ["eps_greedy", "greedy"],
    "eps_scale": 1.0,
}

PRESETS: dict[str, dict] = {
    "fig1-desk": {
        "kind": "estimation",
        "instance": {"d": 200, "K": 1, "m": 1, "s0": 10, "sigma": 0.5, "alpha": 0.5},
        "t_grid": list(range(200, 2001, 200)),
        "replications": config.DEFAULT_REPS_ESTIMATION,
        "policy": _ESTIMATION_POLICY,
    },
    "fig1-paper": {
        "kind": "estimation",
        "instance": {"d": 1000, "K": 1, "m": 1, "s0": 10, "sigma": 0.5, "alpha": 0.5},
        "t_grid": list(range(500, 5001, 500)),
        "replications": config.DEFAULT_REPS_ESTIMATION,
        "policy": _ESTIMATION_POLICY,
    },
    "fig2-desk": {
        "kind": "bandit",
        "instance": {"d": 100, "K": 5, "m": 1, "s0": 10, "sigma": 0.5, "alpha": 0.5},
        "t_grid": [500, 1000, 2000, 3000, 4000],
        "replications": config.DEFAULT_REPS_BANDIT,
        "policy": _BANDIT_POLICY,
    },
    "fig2-paper": {
        "kind": "bandit",
        "instance": {"d": 100, "K": 5, "m": 1, "s0": 10, "sigma": 0.5, "alpha": 0.5},
        "t_grid": [1000, 2000, 4000, 8000, 16000],
        "replications": config.DEFAULT_REPS_BANDIT,
        "policy": _BANDIT_POLICY,
    },
    "fig3-desk": {
        "kind": "bwk",
        "instance": {"d": 50, "K": 5, "m": 5, "s0": 10, "sigma": 0.5, "alpha": 0.5,
                     "budget_ratio": [0.25]},
        "t_grid": [1000, 2000, 4000, 8000],
        "replications": config.DEFAULT_REPS_BANDIT,
        "policy": _BWK_POLICY,
    },
    "fig3-paper": {
        "kind": "bwk",
        "instance": {"d": 200, "K": 5, "m": 5, "s0": 10, "sigma": 0.5, "alpha": 0.5,
                     "budget_ratio": [0.25]},
        "t_grid": [1000, 2000, 4000, 8000, 16000],
        "replications": config.DEFAULT_REPS_BANDIT,
        "policy": _BWK_POLICY,
    },
}

DEFAULT_PRESET = {"estimation": "fig1-desk", "bandit": "fig2-desk", "bwk": "fig3-desk"}


def preset_document(name: str) -> dict:
    """Experiment document (same schema as a --config file) for a named preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}, available: {', '.join(sorted(PRESETS))}")
    doc = copy.deepcopy(PRESETS[name])
    doc["schema_version"] = config.SCHEMA_VERSION
    doc["name"] = name
    return doc
