import logging
from dataclasses import dataclass, field

import numpy as np

import config
from services import environment as env
from services.baselines import lasso_fit, lasso_lambda
from services.environment import Instance
from services.online_ht import HtConfig, ht_config_for, init, update
from services.sparse_core import support_recovery_rate

logger = logging.getLogger("sparse_bwk")

PROPENSITY_MODES = ("full", "decay")


@dataclass
class EstimationRunResult:
    """Per-round Online HT error / recovery, plus LASSO refits at checkpoint rounds."""
    errors: np.ndarray
    recovery: np.ndarray
    checkpoints: np.ndarray
    lasso_errors: dict[float, np.ndarray] = field(default_factory=dict)
    lasso_recovery: dict[float, np.ndarray] = field(default_factory=dict)
    n_observed: int = 0


def propensity(j: int, mode: str, p_scale: float = 1.0) -> float:
    """Observation probability of round j: 1, or min(1, p_scale * j^(-1/3))."""
    if mode == "full":
        return 1.0
    return float(min(1.0, p_scale * j ** (-1 / 3)))


def default_checkpoints(horizon: int, n_points: int = 10) -> np.ndarray:
    return np.unique(np.linspace(horizon / n_points, horizon, n_points).round().astype(int))


def run_estimation(instance: Instance, rng: np.random.Generator | None = None,
                   propensity_mode: str = "full", p_scale: float = 1.0,
                   checkpoints=None, lasso_cs=config.LASSO_C_GRID,
                   ht_config: HtConfig | None = None, arm: int = 0) -> EstimationRunResult:
    """Track one arm's Online HT estimate when round j is observed with probability p_j."""
    if propensity_mode not in PROPENSITY_MODES:
        raise ValueError(f"unknown propensity mode {propensity_mode!r}")
    if p_scale <= 0:
        raise ValueError(f"p_scale must be positive, got {p_scale}")
    rng = rng if rng is not None else np.random.default_rng()
    horizon = instance.config.T
    truth = instance.arms[arm]
    checkpoints = default_checkpoints(horizon) if checkpoints is None else np.asarray(checkpoints, dtype=int)
    if checkpoints.size and (checkpoints.min() < 1 or checkpoints.max() > horizon):
        raise ValueError(f"checkpoints must lie in [1, {horizon}]")

    state = init(ht_config or ht_config_for(instance), arm)
    errors = np.zeros(horizon)
    recovery = np.zeros(horizon)
    X_obs: list[np.ndarray] = []
    y_obs: list[float] = []
    lasso_errors = {c: np.full(checkpoints.size, np.nan) for c in lasso_cs}
    lasso_recovery = {c: np.full(checkpoints.size, np.nan) for c in lasso_cs}
    warm = {c: None for c in lasso_cs}
    marks = {int(t): i for i, t in enumerate(checkpoints)}

    for j in range(1, horizon + 1):
        rnd = env.sample_round(instance, rng)
        p = propensity(j, propensity_mode, p_scale)
        observed = bool(rng.random() < p)
        r = env.reward(instance, arm, rnd) if observed else None
        update(state, rnd.x, observed, p, r)
        if observed:
            X_obs.append(rnd.x)
            y_obs.append(r)

        errors[j - 1] = float(np.sum((state.mu_s - truth) ** 2))
        recovery[j - 1] = support_recovery_rate(state.mu_s, truth)

        if j in marks and X_obs:
            idx = marks[j]
            X, y = np.vstack(X_obs), np.asarray(y_obs)
            for c in lasso_cs:
                fit = lasso_fit(X, y, lasso_lambda(c, instance.d, y.size), beta0=warm[c])
                warm[c] = fit.beta
                lasso_errors[c][idx] = float(np.sum((fit.beta - truth) ** 2))
                lasso_recovery[c][idx] = support_recovery_rate(fit.beta, truth)

    logger.debug("Estimation (%s): %d/%d rounds observed, final error %.4g",
                 propensity_mode, len(y_obs), horizon, errors[-1])
    return EstimationRunResult(
        errors=errors,
        recovery=recovery,
        checkpoints=checkpoints,
        lasso_errors=lasso_errors,
        lasso_recovery=lasso_recovery,
        n_observed=len(y_obs),
    )
