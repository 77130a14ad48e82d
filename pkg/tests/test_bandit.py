import numpy as np
import pytest

from services.bandit import bandit_epsilon, data_regime, run_bandit
from services.baselines import run_etc_lasso
from services.environment import InstanceConfig, generate_instance
from services.online_ht import HtConfig, ht_config_for
from utils.helpers import loglog_slope


def test_single_arm_has_no_regret():
    inst = generate_instance(InstanceConfig(d=10, K=1, m=1, T=150, s0=2, seed=1))
    res = run_bandit(inst, "schedule", 1.0, np.random.default_rng(0), HtConfig(d=10, s0=2, eta=0.15))
    assert np.all(res.cumulative_regret == 0.0)
    assert res.pulls.tolist() == [150]


def test_greedy_on_true_arms_has_no_regret():
    cfg = InstanceConfig(d=12, K=4, m=1, T=300, s0=3, sigma=0.0, seed=2)
    inst = generate_instance(cfg)
    res = run_bandit(inst, "zero", 1.0, np.random.default_rng(1), HtConfig(d=12, s0=3, eta=0.15),
                     initial_estimates=inst.arms)
    assert res.final_regret == pytest.approx(0.0, abs=1e-9)
    assert np.all(res.eps == 0.0)


def test_regret_is_nondecreasing(small_instance):
    res = run_bandit(small_instance, "schedule", 1.0, np.random.default_rng(2),
                     HtConfig(d=small_instance.d, s0=2, eta=0.15))
    assert np.all(np.diff(res.cumulative_regret) >= 0)
    assert res.pulls.sum() == small_instance.config.T
    assert np.all(res.eps <= 1.0 / small_instance.K + 1e-15)
    assert res.estimator_error_series.shape == (small_instance.config.T,)


def test_unknown_mode(small_instance):
    with pytest.raises(ValueError):
        run_bandit(small_instance, "ucb")


def test_bandit_epsilon():
    kwargs = dict(s0=10, d=100, K=5, sigma=0.5, D=3.0, r_max=30.0)
    assert bandit_epsilon(5, scale=0.0, **kwargs) == 0.0
    assert bandit_epsilon(1, **kwargs) == pytest.approx(0.2)
    small = dict(kwargs, sigma=0.01)
    assert bandit_epsilon(800, **small) / bandit_epsilon(100, **small) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bandit_epsilon(0, **kwargs)


def test_data_regime():
    assert data_regime(1000, 1000, 10) == "data-poor"
    assert data_regime(10, 10_000, 2) == "data-rich"


@pytest.mark.slow
def test_eps_greedy_regret_growth_and_comparison():
    grid = np.array([1000, 2000, 3000, 4000])
    reps = 10
    eps_regret = np.zeros((reps, grid.size))
    greedy_regret = np.zeros((reps, grid.size))
    eps_sq_error = np.zeros((reps, grid.size))
    etc_regret = {c: np.zeros(reps) for c in (5.0, 1.0, 0.1)}
    for r in range(reps):
        inst = generate_instance(InstanceConfig(d=100, K=5, m=1, T=4000, s0=10),
                                 rng=np.random.default_rng(r))
        ht = ht_config_for(inst)
        eps_run = run_bandit(inst, "schedule", 1.0, np.random.default_rng(50 + r), ht)
        greedy_run = run_bandit(inst, "zero", 1.0, np.random.default_rng(50 + r), ht)
        eps_regret[r] = eps_run.cumulative_regret[grid - 1]
        greedy_regret[r] = greedy_run.cumulative_regret[grid - 1]
        eps_sq_error[r] = eps_run.estimator_error_series[grid - 1] ** 2

        inst_3000 = generate_instance(InstanceConfig(d=100, K=5, m=1, T=3000, s0=10),
                                      rng=np.random.default_rng(r))
        t1 = round(0.5 * 3000 ** (2 / 3))
        for c in etc_regret:
            etc_regret[c][r] = run_etc_lasso(inst_3000, t1, c, np.random.default_rng(50 + r)).final_regret

    slope = loglog_slope(grid[[0, 1, 3]], eps_regret.mean(axis=0)[[0, 1, 3]])
    assert 0.5 <= slope <= 0.85
    at_3000 = eps_regret[:, 2].mean()
    assert at_3000 < min(v.mean() for v in etc_regret.values())
    assert greedy_regret[:, 2].mean() < at_3000
    assert loglog_slope(grid, eps_sq_error.mean(axis=0)) <= -0.4
