import numpy as np
import pytest

from services import environment as env
from services.environment import InstanceConfig, generate_instance


@pytest.mark.parametrize("kwargs", [
    {"d": 5, "K": 2, "m": 1, "T": 100, "s0": 6},
    {"d": 5, "K": 0, "m": 1, "T": 100, "s0": 2},
    {"d": 5, "K": 2, "m": 1, "T": 100, "s0": 2, "budget_ratio": (1.5,)},
    {"d": 5, "K": 2, "m": 1, "T": 100, "s0": 2, "budget_ratio": (0.001,)},
    {"d": 5, "K": 2, "m": 2, "T": 100, "s0": 2, "budget_ratio": (0.2, 0.3, 0.4)},
    {"d": 5, "K": 2, "m": 1, "T": 100, "s0": 2, "alpha": 1.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        InstanceConfig(**kwargs)


def test_budget_ratio_broadcast():
    cfg = InstanceConfig(d=5, K=2, m=3, T=100, s0=2, budget_ratio=0.25)
    assert cfg.budget_ratio == (0.25, 0.25, 0.25)
    np.testing.assert_allclose(cfg.capacities, [25.0, 25.0, 25.0])


def test_power_decay_covariance():
    sigma = env.power_decay_covariance(4, 0.5)
    assert sigma[0, 0] == 1.0
    assert sigma[0, 3] == pytest.approx(0.125)
    np.testing.assert_array_equal(sigma, sigma.T)


def test_generated_instance_structure(small_instance, small_config):
    inst = small_instance
    assert inst.arms.shape == (3, 8)
    assert inst.weights.shape == (3, 2, 8)
    assert inst.null_arm == 3
    for a in range(inst.K):
        supp = np.flatnonzero(inst.arms[a])
        assert supp.size == small_config.s0
        assert np.all(np.abs(inst.arms[a, supp]) >= 0.5)
        assert np.all(np.abs(inst.arms[a, supp]) <= 1.0)
        # consumption rows share the arm's support
        assert set(np.flatnonzero(inst.weights[a].sum(axis=0))) <= set(supp)
    assert np.all(inst.weights >= 0)
    expected_d_prime = np.abs(inst.weights).sum(axis=2).max() * small_config.feature_bound
    assert inst.d_prime == pytest.approx(expected_d_prime)


def test_generation_is_deterministic(small_config):
    a = generate_instance(small_config)
    b = generate_instance(small_config)
    np.testing.assert_array_equal(a.arms, b.arms)
    np.testing.assert_array_equal(a.weights, b.weights)


def test_sample_round_is_clipped(small_instance, rng):
    bound = small_instance.config.feature_bound
    for _ in range(200):
        rnd = env.sample_round(small_instance, rng)
        assert np.all(np.abs(rnd.x) <= bound)
        assert rnd.noise.shape == (small_instance.K,)


def test_rewards_and_consumption(small_instance, rng):
    inst = small_instance
    rnd = env.sample_round(inst, rng)
    assert env.reward(inst, inst.null_arm, rnd) == 0.0
    assert env.mean_reward(inst, inst.null_arm, rnd.x) == 0.0
    np.testing.assert_array_equal(env.consumption(inst, inst.null_arm, rnd), np.zeros(inst.m))
    a = 1
    assert env.reward(inst, a, rnd) == pytest.approx(inst.arms[a] @ rnd.x + rnd.noise[a])
    costs = env.cost_matrix(inst, rnd.x)
    assert costs.shape == (inst.K, inst.m)
    assert np.all(costs >= 0) and np.all(costs <= inst.d_prime)
    np.testing.assert_allclose(env.consumption(inst, a, rnd), costs[a])


def test_optimal_arm(small_instance, rng):
    rnd = env.sample_round(small_instance, rng)
    means = small_instance.arms @ rnd.x
    assert env.optimal_arm(small_instance, rnd) == int(np.argmax(means))


def test_clamp_rate_in_unit_interval(small_instance, rng):
    rate = env.clamp_rate(small_instance, 100, rng)
    # symmetric features put negative raw consumption on roughly half the draws
    assert 0.0 < rate < 1.0


@pytest.mark.slow
def test_sample_round_covariance_matches_power_decay():
    cfg = InstanceConfig(d=10, K=1, m=1, T=100, s0=2, alpha=0.5, feature_bound=3.0, seed=2)
    inst = generate_instance(cfg)
    rng = np.random.default_rng(31)
    xs = np.vstack([env.sample_round(inst, rng).x for _ in range(200_000)])
    empirical = xs.T @ xs / xs.shape[0]
    assert np.abs(empirical - env.power_decay_covariance(10, 0.5)).max() < 0.02


def test_reward_noise_averages_to_mean_reward(small_instance, rng):
    inst = small_instance
    x = env.sample_round(inst, rng).x
    a = 0
    n = 10_000
    draws = np.array([env.reward(inst, a, env.Round(x=x, noise=env.sample_round(inst, rng).noise))
                      for _ in range(n)])
    se = inst.config.sigma / np.sqrt(n)
    assert abs(draws.mean() - env.mean_reward(inst, a, x)) <= 5 * se
