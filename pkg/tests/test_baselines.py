import math

import numpy as np
import pytest
from scipy import optimize

import config
from services.baselines import kkt_residual, lasso_fit, lasso_lambda, run_etc_lasso
from services.environment import InstanceConfig, generate_instance


def _objective(X, y, beta, lam):
    return float(np.sum((y - X @ beta) ** 2) / X.shape[0] + lam * np.abs(beta).sum())


def test_zero_penalty_orthonormal_design_is_least_squares():
    rng = np.random.default_rng(0)
    X, _ = np.linalg.qr(rng.standard_normal((12, 4)))
    y = rng.standard_normal(12)
    fit = lasso_fit(X, y, 0.0)
    np.testing.assert_allclose(fit.beta, X.T @ y, atol=1e-10)
    assert fit.converged


def test_large_penalty_kills_every_coefficient():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 6))
    y = rng.standard_normal(30)
    lam_max = 2 * np.abs(X.T @ y).max() / X.shape[0]
    fit = lasso_fit(X, y, lam_max)
    np.testing.assert_array_equal(fit.beta, np.zeros(6))
    assert np.count_nonzero(lasso_fit(X, y, 0.9 * lam_max).beta) > 0


def test_fits_satisfy_kkt():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n, d = int(rng.integers(5, 60)), int(rng.integers(2, 15))
        X = rng.standard_normal((n, d))
        y = X[:, 0] - 2 * X[:, 1] + 0.3 * rng.standard_normal(n)
        lam = float(rng.uniform(0.01, 1.0))
        fit = lasso_fit(X, y, lam)
        assert fit.converged
        assert fit.kkt_residual <= config.LASSO_KKT_TOL
        assert kkt_residual(X.T @ X, X.T @ y, n, fit.beta, lam) == pytest.approx(fit.kkt_residual)


def test_objective_matches_bound_constrained_oracle():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    lam = 0.2
    fit = lasso_fit(X, y, lam)

    # beta = u - v with u, v >= 0 makes the penalty smooth
    def split(z):
        u, v = z[:3], z[3:]
        r = y - X @ (u - v)
        value = r @ r / 20 + lam * (u.sum() + v.sum())
        g = -2 * X.T @ r / 20
        return value, np.concatenate([g + lam, -g + lam])

    res = optimize.minimize(split, np.zeros(6), jac=True, method="L-BFGS-B",
                            bounds=[(0, None)] * 6, options={"ftol": 1e-15, "gtol": 1e-12})
    assert _objective(X, y, fit.beta, lam) == pytest.approx(res.fun, abs=1e-5)


def test_warm_start_reaches_same_fit():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((40, 8))
    y = rng.standard_normal(40)
    cold = lasso_fit(X, y, 0.1)
    warm = lasso_fit(X, y, 0.1, beta0=lasso_fit(X, y, 0.3).beta)
    np.testing.assert_allclose(warm.beta, cold.beta, atol=1e-6)


def test_non_convergence_is_reported(monkeypatch):
    monkeypatch.setattr(config, "LASSO_MAX_SWEEPS", 1)
    rng = np.random.default_rng(5)
    X = rng.standard_normal((50, 10))
    X[:, 1] = X[:, 0] + 0.01 * rng.standard_normal(50)
    fit = lasso_fit(X, X[:, 0] + X[:, 1], 0.001)
    assert not fit.converged
    assert fit.iterations == 1


def test_lasso_input_validation():
    with pytest.raises(ValueError):
        lasso_fit(np.ones((3, 2)), np.ones(4), 0.1)
    with pytest.raises(ValueError):
        lasso_fit(np.ones((3, 2)), np.ones(3), -1.0)


def test_lasso_lambda():
    assert lasso_lambda(1.0, 10, 100) == pytest.approx(math.sqrt(math.log(1000) / 100))
    assert lasso_lambda(5.0, 1, 1) == 0.0
    with pytest.raises(ValueError):
        lasso_lambda(1.0, 10, 0)


def test_etc_commits_after_exploration(small_instance):
    res = run_etc_lasso(small_instance, 60, 1.0, np.random.default_rng(6))
    assert res.arms.size == small_instance.config.T
    assert np.all(res.eps[:60] == pytest.approx(1 / small_instance.K))
    assert np.all(res.eps[60:] == 0.0)
    assert np.all(np.diff(res.cumulative_regret) >= 0)


def test_etc_noiseless_commit_has_no_regret():
    inst = generate_instance(InstanceConfig(d=10, K=3, m=1, T=700, s0=2, sigma=0.0, seed=4))
    res = run_etc_lasso(inst, 600, 0.01, np.random.default_rng(7))
    post = res.cumulative_regret[-1] - res.cumulative_regret[599]
    assert post <= 0.01 * res.cumulative_regret[599] + 1e-6


def test_etc_survives_unpulled_arms(small_instance):
    res = run_etc_lasso(small_instance, 1, 1.0, np.random.default_rng(8))
    assert res.pulls.sum() == small_instance.config.T


def test_etc_rejects_bad_exploration_length(small_instance):
    with pytest.raises(ValueError):
        run_etc_lasso(small_instance, small_instance.config.T, 1.0)
