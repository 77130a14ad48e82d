import logging
import math
from dataclasses import dataclass

import numpy as np

from services import environment as env
from services.environment import Instance
from services.online_ht import EstimatorBank, HtConfig, ht_config_for

logger = logging.getLogger("sparse_bwk")

EPS_MODES = ("schedule", "zero")


@dataclass
class BanditRunResult:
    policy: str
    arms: np.ndarray
    cumulative_regret: np.ndarray
    pulls: np.ndarray
    estimator_error_series: np.ndarray
    eps: np.ndarray

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1]) if self.cumulative_regret.size else 0.0


def bandit_epsilon(t: int, s0: int, d: int, K: int, sigma: float, D: float,
                   r_max: float, scale: float = 1.0) -> float:
    """sigma^(2/3) D^(4/3) s0^(2/3) log(dK)^(1/3) t^(-1/3) / (r_max K)^(2/3), capped at 1/K."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    if scale == 0:
        return 0.0
    if r_max <= 0:
        return 1.0 / K
    eps = (scale * sigma ** (2 / 3) * D ** (4 / 3) * s0 ** (2 / 3)
           * math.log(d * K) ** (1 / 3) * t ** (-1 / 3) / (r_max * K) ** (2 / 3))
    return float(min(max(eps, 0.0), 1.0 / K))


def data_regime(d: int, T: int, s0: int) -> str:
    """'data-poor' when d >= T^(1/3) s0^(4/3), otherwise 'data-rich'."""
    return "data-poor" if d >= T ** (1 / 3) * s0 ** (4 / 3) else "data-rich"


def pseudo_regret(instance: Instance, x, arm: int) -> float:
    means = instance.arms @ x
    return float(means.max() - means[arm])


def run_bandit(instance: Instance, eps_mode: str = "schedule", scale: float = 1.0,
               rng: np.random.Generator | None = None, ht_config: HtConfig | None = None,
               initial_estimates=None, r_max: float | None = None) -> BanditRunResult:
    """Unconstrained eps-greedy (or greedy) play on Online HT estimates; budgets are ignored."""
    if eps_mode not in EPS_MODES:
        raise ValueError(f"unknown eps mode {eps_mode!r}, expected one of {EPS_MODES}")
    rng = rng if rng is not None else np.random.default_rng()
    cfg = instance.config
    horizon, k = cfg.T, instance.K
    r_max = r_max if r_max is not None else cfg.feature_bound * cfg.s0

    bank = EstimatorBank(ht_config or ht_config_for(instance), k)
    if initial_estimates is not None:
        bank.seed_estimates(initial_estimates)

    arms = np.zeros(horizon, dtype=int)
    increments = np.zeros(horizon)
    errors = np.zeros(horizon)
    eps_series = np.zeros(horizon)

    for i in range(horizon):
        rnd = env.sample_round(instance, rng)
        eps = 0.0 if eps_mode == "zero" else bandit_epsilon(
            i + 1, cfg.s0, cfg.d, k, cfg.sigma, cfg.feature_bound, r_max, scale,
        )
        scores = bank.estimates() @ rnd.x
        greedy = np.flatnonzero(scores == scores.max())

        props = np.full(k, eps)
        props[greedy] += (1.0 - k * eps) / greedy.size

        if eps > 0 and rng.random() < k * eps:
            arm = int(rng.integers(k))
        else:
            arm = int(greedy[rng.integers(greedy.size)])

        bank.feed(rnd.x, arm, props, env.reward(instance, arm, rnd))
        arms[i] = arm
        increments[i] = pseudo_regret(instance, rnd.x, arm)
        errors[i] = bank.max_error(instance.arms)
        eps_series[i] = eps

    policy = "online_ht_greedy" if eps_mode == "zero" else "online_ht_eps"
    logger.debug("%s: T=%d regret=%.3f final error=%.4f", policy, horizon,
                 increments.sum(), errors[-1])
    return BanditRunResult(
        policy=policy,
        arms=arms,
        cumulative_regret=np.cumsum(increments),
        pulls=np.bincount(arms, minlength=k),
        estimator_error_series=errors,
        eps=eps_series,
    )
