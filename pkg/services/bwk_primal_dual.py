import logging
import math
from dataclasses import dataclass, field

import numpy as np

import config
from services import environment as env
from services.environment import Instance
from services.lp_solver import allocation_data, solve_allocation
from services.online_ht import EstimatorBank, HtConfig, ht_config_for

logger = logging.getLogger("sparse_bwk")

MODES = ("eps_greedy", "greedy")


@dataclass
class DualState:
    """Hedge weights over resources; eta = alpha / sum(alpha).

    The weights are carried as logs so that long runs of under-budget
    rounds cannot underflow every alpha_i to zero.
    """
    alpha: np.ndarray
    eta: np.ndarray
    delta: float
    log_alpha: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"dual step delta must be positive, got {self.delta}")
        if self.log_alpha is None:
            if np.any(self.alpha <= 0):
                raise ValueError("alpha must be strictly positive")
            self.log_alpha = np.log(self.alpha)


def init_dual(m: int, delta: float) -> DualState:
    return DualState(alpha=np.ones(m), eta=np.full(m, 1.0 / m), delta=delta)


@dataclass(frozen=True)
class BwkConfig:
    """Policy parameters; None means derive the default from the instance."""
    z: float | None = None
    delta: float | None = None
    t0: int | None = None
    eps_scale: float = 1.0
    r_max: float | None = None
    eta: float | None = None           # Online HT step size
    step_scale: float = 1.0            # multiplier on the default step when eta is None
    rho: float = config.HT_RHO
    normalize_alpha: bool = True

    def __post_init__(self):
        if self.z is not None and self.z < 0:
            raise ValueError(f"z must be >= 0, got {self.z}")
        if self.delta is not None and self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.t0 is not None and self.t0 < 1:
            raise ValueError(f"t0 must be >= 1, got {self.t0}")
        if self.eps_scale < 0:
            raise ValueError(f"eps_scale must be >= 0, got {self.eps_scale}")


@dataclass
class Selection:
    arm: int
    propensities: np.ndarray  # K + 1 entries, null arm last
    explored: bool


@dataclass
class BwkRunResult:
    mode: str
    arms: np.ndarray
    rewards: np.ndarray           # observed (noisy) rewards, 0 on null rounds
    mean_rewards: np.ndarray      # <mu*_a, x_t> of executed pulls
    consumption: np.ndarray       # T x m running totals
    etas: np.ndarray              # T x m dual prices used for the decision
    eps: np.ndarray
    estimator_error_series: np.ndarray
    tau: int
    collected: float
    hindsight_value: float
    regret: float
    z: float
    capacities: np.ndarray = field(repr=False, default=None)

    @property
    def horizon(self) -> int:
        return self.arms.size

    @property
    def relative_regret(self) -> float:
        if self.hindsight_value <= 0:
            raise ValueError(f"hindsight value must be positive, got {self.hindsight_value}")
        return self.regret / self.hindsight_value


# --- Primal step ---

def select_arm(mu_hats, x, costs, eta, z: float, eps: float,
               rng: np.random.Generator) -> Selection:
    """Dual-adjusted eps-greedy choice; the null arm (score 0) joins the greedy argmax only."""
    mu_hats = np.asarray(mu_hats, dtype=float)
    k = mu_hats.shape[0]
    if not 0.0 <= eps <= 1.0 / k + 1e-15:
        raise ValueError(f"eps must lie in [0, 1/K] = [0, {1.0 / k}], got {eps}")

    scores = np.empty(k + 1)
    scores[:k] = mu_hats @ x - z * (np.asarray(costs) @ eta)
    scores[k] = 0.0
    greedy = np.flatnonzero(scores == scores.max())

    exploit = 1.0 - k * eps
    props = np.zeros(k + 1)
    props[:k] = eps
    props[greedy] += exploit / greedy.size

    explored = bool(eps > 0 and rng.random() < k * eps)
    if explored:
        arm = int(rng.integers(k))
    else:
        arm = int(greedy[rng.integers(greedy.size)])
    return Selection(arm=arm, propensities=props, explored=explored)


# --- Dual step ---

def dual_update(dual: DualState, consumed, per_round_budget, explored: bool,
                normalize: bool = True) -> DualState:
    """alpha_i <- alpha_i (1 + delta)^((b_i - C_i/T)(1 - explored)); eta = alpha / sum(alpha)."""
    if explored:
        return dual
    exponent = np.asarray(consumed, dtype=float) - np.asarray(per_round_budget, dtype=float)
    log_alpha = dual.log_alpha + exponent * np.log1p(dual.delta)
    shifted = log_alpha - log_alpha.max()
    weights = np.exp(shifted)
    if normalize:
        log_alpha = shifted
    return DualState(alpha=np.exp(log_alpha), eta=weights / weights.sum(),
                     delta=dual.delta, log_alpha=log_alpha)


def epsilon_schedule(t: int, s0: int, d: int, K: int, sigma: float, D: float,
                     r_max: float, z: float, d_prime: float, scale: float = 1.0) -> float:
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    if scale == 0:
        return 0.0
    numer = sigma ** (2 / 3) * D ** (4 / 3) * s0 ** (2 / 3) * math.log(d * K) ** (1 / 3) * t ** (-1 / 3)
    denom = (r_max + d_prime * z) ** (2 / 3) * K ** (2 / 3)
    eps = scale * numer / denom if denom > 0 else 1.0 / K
    return float(min(max(eps, 0.0), 1.0 / K))


def default_delta(m: int, horizon: int, d_prime: float) -> float:
    """sqrt(log m / (T D')), with m floored at 2 so a single resource still moves."""
    return math.sqrt(math.log(max(m, 2)) / (horizon * (d_prime if d_prime > 0 else 1.0)))


def default_t0(K: int, horizon: int) -> int:
    return max(K, math.ceil(horizon ** (2 / 3)))


# --- Budget ledger ---

class _Ledger:
    """Executes pulls against the knapsacks and records the trajectory.

    A pull whose consumption would overdraw any resource is never executed:
    the stopping round is recorded and the null arm is played from then on.
    """

    def __init__(self, instance: Instance):
        horizon = instance.config.T
        self.instance = instance
        self.t = 0
        self.tau: int | None = None
        self.used = np.zeros(instance.m)
        self.arms = np.full(horizon, instance.null_arm, dtype=int)
        self.rewards = np.zeros(horizon)
        self.mean_rewards = np.zeros(horizon)
        self.consumption = np.zeros((horizon, instance.m))
        self.etas = np.zeros((horizon, instance.m))
        self.eps = np.zeros(horizon)
        self.errors = np.zeros(horizon)
        self.features = np.zeros((horizon, instance.d))

    @property
    def depleted(self) -> bool:
        return self.tau is not None

    @property
    def remaining(self) -> int:
        return self.instance.config.T - self.t

    def pull(self, arm: int, rnd: env.Round, eta, eps: float) -> tuple[bool, np.ndarray, float | None]:
        """Try to pull `arm`; returns (executed, consumption, observed reward)."""
        inst = self.instance
        i = self.t
        self.features[i] = rnd.x
        self.etas[i] = eta
        self.eps[i] = eps

        executed = False
        cost = np.zeros(inst.m)
        observed = None
        if arm != inst.null_arm and not self.depleted:
            cost = env.consumption(inst, arm, rnd)
            if np.any(inst.capacities - self.used < cost):
                self.tau = i + 1
                logger.info("Budget exhausted at round %d/%d: arm %d needs %s, left %s; "
                            "falling back to the null arm",
                            self.tau, inst.config.T, arm,
                            np.round(cost, 4).tolist(),
                            np.round(inst.capacities - self.used, 4).tolist())
                cost = np.zeros(inst.m)
            else:
                executed = True
                self.used += cost
                observed = env.reward(inst, arm, rnd)
                self.arms[i] = arm
                self.rewards[i] = observed
                self.mean_rewards[i] = env.mean_reward(inst, arm, rnd.x)

        self.consumption[i] = self.used
        self.t += 1
        return executed, cost, observed

    def record_error(self, bank: EstimatorBank) -> None:
        self.errors[self.t - 1] = bank.max_error(self.instance.arms)


def _z_phase(instance: Instance, t0: int, rng: np.random.Generator,
             bank: EstimatorBank, ledger: _Ledger) -> float:
    k = instance.K
    uniform = np.full(k, 1.0 / k)
    dual_eta = np.full(instance.m, 1.0 / instance.m)
    for _ in range(t0):
        rnd = env.sample_round(instance, rng)
        arm = int(rng.integers(k))
        executed, _, observed = ledger.pull(arm, rnd, dual_eta, 1.0 / k)
        if executed:
            bank.feed(rnd.x, arm, uniform, observed)
        ledger.record_error(bank)

    features = ledger.features[ledger.t - t0:ledger.t]
    data = allocation_data(features, bank.estimates(), instance.weights, instance.capacities,
                           scale=instance.config.T / t0, d_prime=instance.d_prime)
    v_hat = solve_allocation(data).value
    c_min = float(np.min(instance.capacities))
    if c_min <= 0:
        logger.warning("Smallest capacity is %.4g; using z = 1", c_min)
        return 1.0
    return v_hat / c_min + 1.0


def estimate_z(instance: Instance, t0: int, rng: np.random.Generator,
               ht_config: HtConfig | None = None) -> tuple[float, EstimatorBank]:
    """Uniform sampling for t0 rounds, then z = V_hat / C_min + 1 with V_hat scaled to T."""
    if t0 < instance.K:
        raise ValueError(f"t0={t0} must be >= K={instance.K}")
    if t0 > instance.config.T:
        raise ValueError(f"t0={t0} exceeds the horizon T={instance.config.T}")
    bank = EstimatorBank(ht_config or ht_config_for(instance), instance.K)
    z = _z_phase(instance, t0, rng, bank, _Ledger(instance))
    return z, bank


def estimate_vub(instance: Instance, n_rounds: int, rng: np.random.Generator,
                 n_samples: int = 1) -> float:
    """Hindsight LP value averaged over fresh feature sequences, rescaled to the horizon."""
    if n_rounds < 1 or n_samples < 1:
        raise ValueError("n_rounds and n_samples must be >= 1")
    values = []
    for _ in range(n_samples):
        features = np.vstack([env.sample_round(instance, rng).x for _ in range(n_rounds)])
        data = allocation_data(features, instance.arms, instance.weights,
                               instance.capacities * n_rounds / instance.config.T,
                               d_prime=instance.d_prime)
        values.append(solve_allocation(data).value * instance.config.T / n_rounds)
    return float(np.mean(values))


# --- Full run ---

def run_bwk(instance: Instance, bwk_config: BwkConfig | None = None, mode: str = "eps_greedy",
            rng: np.random.Generator | None = None) -> BwkRunResult:
    if mode not in MODES:
        raise ValueError(f"unknown BwK mode {mode!r}, expected one of {MODES}")
    bwk_config = bwk_config or BwkConfig()
    rng = rng if rng is not None else np.random.default_rng()
    cfg = instance.config
    horizon, k, m = cfg.T, instance.K, instance.m

    t0 = bwk_config.t0 if bwk_config.t0 is not None else default_t0(k, horizon)
    if t0 < k or t0 + k >= horizon:
        raise ValueError(f"t0={t0} leaves no main phase (K={k}, T={horizon})")
    delta = bwk_config.delta or default_delta(m, horizon, instance.d_prime)
    r_max = bwk_config.r_max if bwk_config.r_max is not None else cfg.feature_bound * cfg.s0
    per_round_budget = instance.capacities / horizon

    bank = EstimatorBank(ht_config_for(instance, bwk_config.eta, bwk_config.rho, bwk_config.step_scale), k)
    ledger = _Ledger(instance)

    z_hat = _z_phase(instance, t0, rng, bank, ledger)
    z = bwk_config.z if bwk_config.z is not None else z_hat
    logger.debug("BwK %s: t0=%d z=%.4f delta=%.4g", mode, t0, z, delta)

    dual = init_dual(m, delta)

    # one deterministic pull per arm
    for arm in range(k):
        rnd = env.sample_round(instance, rng)
        props = np.zeros(k)
        props[arm] = 1.0
        executed, _, observed = ledger.pull(arm, rnd, dual.eta, 0.0)
        if executed:
            bank.feed(rnd.x, arm, props, observed)
        ledger.record_error(bank)

    while ledger.remaining > 0:
        rnd = env.sample_round(instance, rng)
        if ledger.depleted:
            ledger.pull(instance.null_arm, rnd, dual.eta, 0.0)
            ledger.record_error(bank)
            continue

        t = ledger.t + 1
        eps = 0.0 if mode == "greedy" else epsilon_schedule(
            t, cfg.s0, cfg.d, k, cfg.sigma, cfg.feature_bound, r_max, z,
            instance.d_prime, bwk_config.eps_scale,
        )
        costs = env.cost_matrix(instance, rnd.x)
        sel = select_arm(bank.estimates(), rnd.x, costs, dual.eta, z, eps, rng)
        executed, cost, observed = ledger.pull(sel.arm, rnd, dual.eta, eps)
        if ledger.depleted:
            ledger.record_error(bank)
            continue

        dual = dual_update(dual, cost, per_round_budget, sel.explored,
                           normalize=bwk_config.normalize_alpha)
        bank.feed(rnd.x, sel.arm if executed else instance.null_arm,
                  sel.propensities[:k], observed)
        ledger.record_error(bank)

    tau = ledger.tau if ledger.tau is not None else horizon
    hindsight = solve_allocation(allocation_data(
        ledger.features, instance.arms, instance.weights, instance.capacities,
        d_prime=instance.d_prime,
    )).value
    collected = float(ledger.mean_rewards.sum())
    logger.info("BwK %s run done: T=%d tau=%d collected=%.3f hindsight=%.3f",
                mode, horizon, tau, collected, hindsight)

    return BwkRunResult(
        mode=mode,
        arms=ledger.arms,
        rewards=ledger.rewards,
        mean_rewards=ledger.mean_rewards,
        consumption=ledger.consumption,
        etas=ledger.etas,
        eps=ledger.eps,
        estimator_error_series=ledger.errors,
        tau=tau,
        collected=collected,
        hindsight_value=hindsight,
        regret=hindsight - collected,
        z=z,
        capacities=instance.capacities.copy(),
    )
