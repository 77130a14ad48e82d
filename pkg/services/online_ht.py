import logging
import math
from dataclasses import dataclass, field

import numpy as np

import config
from services.sparse_core import SpectralProfile, hard_threshold, sparse_spectrum

logger = logging.getLogger("sparse_bwk")


@dataclass(frozen=True)
class HtConfig:
    d: int
    s0: int
    eta: float
    rho: float = config.HT_RHO

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not 1 <= self.s0 <= self.d:
            raise ValueError(f"s0 must lie in [1, d], got {self.s0}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.eta <= 0:
            raise ValueError(f"step size must be positive, got {self.eta}")

    @property
    def s(self) -> int:
        """Working sparsity: ceil(s0 / rho), capped at d."""
        return min(self.d, math.ceil(self.s0 / self.rho))


@dataclass
class OnlineHtState:
    """Streaming estimator state for one arm.

    cov_sum holds sum_j y_j x_j x_j^T / p_j; the running covariance is cov_sum / t.
    """
    arm: int
    s: int
    s0: int
    eta: float
    t: int = 0
    cov_sum: np.ndarray = field(default=None, repr=False)
    reward_sum: np.ndarray = field(default=None, repr=False)
    mu: np.ndarray = field(default=None, repr=False)
    mu_s: np.ndarray = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.mu.size

    @property
    def sigma_hat(self) -> np.ndarray:
        if self.t == 0:
            return np.zeros_like(self.cov_sum)
        return self.cov_sum / self.t


def init(ht_config: HtConfig, arm: int) -> OnlineHtState:
    d = ht_config.d
    return OnlineHtState(
        arm=arm,
        s=ht_config.s,
        s0=ht_config.s0,
        eta=ht_config.eta,
        t=0,
        cov_sum=np.zeros((d, d)),
        reward_sum=np.zeros(d),
        mu=np.zeros(d),
        mu_s=np.zeros(d),
    )


def update(state: OnlineHtState, x, pulled: bool, p: float,
           reward: float | None = None) -> OnlineHtState:
    """Absorb one round: IPW moment update, averaged gradient, two-level thresholding."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"propensity must lie in [0, 1], got {p}")
    if pulled and reward is None:
        raise ValueError(f"arm {state.arm}: pulled without an observed reward")
    if pulled and p == 0.0:
        raise ValueError(f"arm {state.arm}: pulled with zero propensity")

    x = np.asarray(x, dtype=float)
    state.t += 1
    if pulled:
        w = 1.0 / p
        state.cov_sum += w * np.outer(x, x)
        state.reward_sum += (w * reward) * x

    supp = np.flatnonzero(state.mu)
    cov_mu = state.cov_sum[:, supp] @ state.mu[supp]
    grad = (2.0 / state.t) * (cov_mu - state.reward_sum)

    state.mu = hard_threshold(state.mu - state.eta * grad, state.s)
    state.mu_s = hard_threshold(state.mu, state.s0)
    return state


def estimate(state: OnlineHtState) -> np.ndarray:
    return state.mu_s.copy()


def default_step_size(profile: SpectralProfile) -> float:
    """eta = 1 / (4 kappa phi_max(s))."""
    return 1.0 / (4.0 * profile.kappa * profile.phi_max)


def ht_config_for(instance, eta: float | None = None, rho: float = config.HT_RHO,
                  step_scale: float = 1.0) -> HtConfig:
    """Settings for an instance.

    Without an explicit `eta` the step is step_scale / (4 kappa phi_max) of the
    instance covariance; step_scale = 4 gives 1 / (kappa phi_max).
    """
    if step_scale <= 0:
        raise ValueError(f"step_scale must be positive, got {step_scale}")
    cfg = instance.config
    if eta is None:
        s = HtConfig(d=cfg.d, s0=cfg.s0, eta=1.0, rho=rho).s
        eta = step_scale * default_step_size(sparse_spectrum(instance.covariance, s))
    return HtConfig(d=cfg.d, s0=cfg.s0, eta=eta, rho=rho)


class EstimatorBank:
    """One Online HT state per real arm, updated together every round."""

    def __init__(self, ht_config: HtConfig, n_arms: int):
        self.config = ht_config
        self.states = [init(ht_config, a) for a in range(n_arms)]

    @property
    def n_arms(self) -> int:
        return len(self.states)

    def estimates(self) -> np.ndarray:
        """K x d matrix of the current s0-sparse estimates."""
        return np.vstack([st.mu_s for st in self.states])

    def seed_estimates(self, mus) -> None:
        """Start every arm from a given iterate (oracle initialization)."""
        mus = np.asarray(mus, dtype=float)
        for st, mu in zip(self.states, mus):
            st.mu = hard_threshold(mu, st.s)
            st.mu_s = hard_threshold(st.mu, st.s0)

    def feed(self, x, arm: int, propensities, reward: float | None) -> None:
        """Update every arm's estimator; only `arm` observed `reward`."""
        for st in self.states:
            pulled = st.arm == arm
            update(st, x, pulled, float(propensities[st.arm]), reward if pulled else None)

    def max_error(self, truth) -> float:
        """max_a ||mu_s_a - mu*_a||_2."""
        truth = np.asarray(truth)
        return float(max(np.linalg.norm(st.mu_s - truth[st.arm]) for st in self.states))
