import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

import config

logger = logging.getLogger("sparse_bwk")


@dataclass(frozen=True)
class InstanceConfig:
    d: int
    K: int
    m: int
    T: int
    s0: int
    sigma: float = config.NOISE_SIGMA
    alpha: float = config.COVARIANCE_ALPHA
    feature_bound: float = config.FEATURE_BOUND
    budget_ratio: tuple[float, ...] = (1.0,)
    signal_low: float = config.SIGNAL_LOW
    signal_high: float = config.SIGNAL_HIGH
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.budget_ratio, (int, float)):
            object.__setattr__(self, "budget_ratio", (float(self.budget_ratio),) * self.m)
        else:
            ratios = tuple(float(r) for r in self.budget_ratio)
            if len(ratios) == 1 and self.m > 1:
                ratios = ratios * self.m
            object.__setattr__(self, "budget_ratio", ratios)
        if min(self.d, self.K, self.m, self.T, self.s0) < 1:
            raise ValueError("d, K, m, T and s0 must all be >= 1")
        if self.s0 > self.d:
            raise ValueError(f"s0={self.s0} exceeds d={self.d}")
        if len(self.budget_ratio) != self.m:
            raise ValueError(f"budget_ratio has {len(self.budget_ratio)} entries, expected m={self.m}")
        for r in self.budget_ratio:
            if not 0 < r <= 1:
                raise ValueError(f"budget ratio {r} outside (0, 1]")
            if r * self.T < 1:
                raise ValueError(f"budget ratio {r} gives a capacity below 1 at T={self.T}")
        if not 0 <= self.alpha < 1:
            raise ValueError(f"covariance decay alpha must lie in [0, 1), got {self.alpha}")
        if self.sigma < 0 or self.feature_bound <= 0:
            raise ValueError("sigma must be >= 0 and feature_bound > 0")
        if not 0 <= self.signal_low <= self.signal_high <= 1:
            raise ValueError("signal range must satisfy 0 <= low <= high <= 1")

    @property
    def capacities(self) -> np.ndarray:
        return np.asarray(self.budget_ratio) * self.T


@dataclass
class Instance:
    """Synthetic problem: sparse arms, consumption matrices, feature law, budgets."""
    arms: np.ndarray          # K x d
    weights: np.ndarray       # K x m x d, nonnegative
    covariance: np.ndarray    # d x d
    capacities: np.ndarray    # m
    config: InstanceConfig
    chol: np.ndarray = field(default=None, repr=False)
    d_prime: float = 0.0

    def __post_init__(self):
        if self.chol is None:
            self.chol = linalg.cholesky(self.covariance, lower=True)
        if not self.d_prime:
            row_l1 = np.abs(self.weights).sum(axis=2)
            self.d_prime = float(row_l1.max() * self.config.feature_bound) if row_l1.size else 0.0

    @property
    def K(self) -> int:
        return self.arms.shape[0]

    @property
    def m(self) -> int:
        return self.weights.shape[1]

    @property
    def d(self) -> int:
        return self.arms.shape[1]

    @property
    def null_arm(self) -> int:
        return self.K


@dataclass
class Round:
    x: np.ndarray
    noise: np.ndarray  # one potential noise draw per real arm


def power_decay_covariance(d: int, alpha: float) -> np.ndarray:
    """Sigma_ij = alpha^|i-j|."""
    idx = np.arange(d)
    return np.power(alpha, np.abs(idx[:, None] - idx[None, :])).astype(float)


def generate_instance(cfg: InstanceConfig, rng: np.random.Generator | None = None) -> Instance:
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    arms = np.zeros((cfg.K, cfg.d))
    weights = np.zeros((cfg.K, cfg.m, cfg.d))
    for a in range(cfg.K):
        supp = np.sort(rng.choice(cfg.d, size=cfg.s0, replace=False))
        magnitudes = rng.uniform(cfg.signal_low, cfg.signal_high, size=cfg.s0)
        signs = rng.choice([-1.0, 1.0], size=cfg.s0)
        arms[a, supp] = magnitudes * signs
        weights[a][:, supp] = rng.uniform(0.0, 1.0, size=(cfg.m, cfg.s0))

    instance = Instance(
        arms=arms,
        weights=weights,
        covariance=power_decay_covariance(cfg.d, cfg.alpha),
        capacities=cfg.capacities,
        config=cfg,
    )
    logger.debug("Instance generated: d=%d K=%d m=%d T=%d s0=%d D'=%.3f",
                 cfg.d, cfg.K, cfg.m, cfg.T, cfg.s0, instance.d_prime)
    return instance


def sample_round(instance: Instance, rng: np.random.Generator) -> Round:
    """x ~ N(0, Sigma) clipped to [-D, D]; per-arm noise ~ N(0, sigma^2)."""
    bound = instance.config.feature_bound
    x = np.clip(instance.chol @ rng.standard_normal(instance.d), -bound, bound)
    noise = rng.standard_normal(instance.K) * instance.config.sigma
    return Round(x=x, noise=noise)


def mean_reward(instance: Instance, a: int, x) -> float:
    if a == instance.null_arm:
        return 0.0
    return float(instance.arms[a] @ x)


def reward(instance: Instance, a: int, rnd: Round) -> float:
    """<mu*_a, x> + xi_a; the null arm pays 0."""
    if a == instance.null_arm:
        return 0.0
    return float(instance.arms[a] @ rnd.x + rnd.noise[a])


def raw_consumption(instance: Instance, x) -> np.ndarray:
    """K x m matrix of unclamped W_a x."""
    return instance.weights @ x


def cost_matrix(instance: Instance, x) -> np.ndarray:
    """K x m matrix of clamp(W_a x, 0, D')."""
    return np.clip(raw_consumption(instance, x), 0.0, instance.d_prime)


def consumption(instance: Instance, a: int, rnd: Round) -> np.ndarray:
    if a == instance.null_arm:
        return np.zeros(instance.m)
    return np.clip(instance.weights[a] @ rnd.x, 0.0, instance.d_prime)


def optimal_arm(instance: Instance, rnd: Round) -> int:
    """argmax_a <mu*_a, x>; np.argmax resolves ties to the lowest id."""
    return int(np.argmax(instance.arms @ rnd.x))


def clamp_rate(instance: Instance, n_rounds: int, rng: np.random.Generator) -> float:
    """Fraction of sampled (round, arm) pairs whose raw consumption had a negative entry."""
    clamped = 0
    for _ in range(n_rounds):
        rnd = sample_round(instance, rng)
        clamped += int(np.any(raw_consumption(instance, rnd.x) < 0, axis=1).sum())
    return clamped / (n_rounds * instance.K)
