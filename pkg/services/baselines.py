import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso, LinearRegression

import config
from services import environment as env
from services.bandit import BanditRunResult, pseudo_regret
from services.environment import Instance

logger = logging.getLogger("sparse_bwk")


@dataclass
class LassoFit:
    beta: np.ndarray
    lam: float
    kkt_residual: float
    iterations: int
    converged: bool


def kkt_residual(gram: np.ndarray, xty: np.ndarray, n: int, beta: np.ndarray, lam: float) -> float:
    """Largest violation of the subgradient conditions of (1/n)||y - X b||^2 + lam ||b||_1."""
    grad = (2.0 / n) * (gram @ beta - xty)
    active = beta != 0
    viol = np.where(active, np.abs(grad + lam * np.sign(beta)), np.maximum(np.abs(grad) - lam, 0.0))
    return float(viol.max()) if viol.size else 0.0


def _refit_active_set(gram, xty, n, beta, lam) -> np.ndarray:
    """Solve the stationarity equations on the support with signs held fixed."""
    active = np.flatnonzero(beta)
    if active.size == 0:
        return beta
    rhs = xty[active] - 0.5 * n * lam * np.sign(beta[active])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            sol = linalg.solve(gram[np.ix_(active, active)], rhs, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        return beta
    if np.any(np.sign(sol) != np.sign(beta[active])):
        return beta
    refit = beta.copy()
    refit[active] = sol
    if kkt_residual(gram, xty, n, refit, lam) < kkt_residual(gram, xty, n, beta, lam):
        return refit
    return beta


def lasso_fit(X, y, lam: float, beta0=None) -> LassoFit:
    """Cyclic coordinate descent on (1/t)||y - X beta||^2 + lam ||beta||_1.

    scikit-learn minimizes (1/2t)||y - X beta||^2 + alpha ||beta||_1, so
    alpha = lam / 2. Non-convergence is reported on the fit, not raised.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    n, d = X.shape
    if n < 1:
        raise ValueError("lasso_fit needs at least one sample")
    if y.size != n:
        raise ValueError(f"X has {n} rows but y has {y.size} entries")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")

    gram = X.T @ X
    xty = X.T @ y
    if lam == 0:
        beta = LinearRegression(fit_intercept=False).fit(X, y).coef_.copy()
        return LassoFit(beta=beta, lam=lam, kkt_residual=kkt_residual(gram, xty, n, beta, lam),
                        iterations=0, converged=True)

    model = Lasso(alpha=lam / 2, fit_intercept=False, selection="cyclic",
                  max_iter=config.LASSO_MAX_SWEEPS, tol=config.LASSO_TOL, warm_start=beta0 is not None)
    if beta0 is not None:
        model.coef_ = np.array(beta0, dtype=float)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model.fit(X, y)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    sweeps = int(model.n_iter_)

    beta = _refit_active_set(gram, xty, n, np.asarray(model.coef_, dtype=float).copy(), lam)
    residual = kkt_residual(gram, xty, n, beta, lam)
    if not converged:
        logger.warning("LASSO did not converge in %d sweeps (lambda=%.4g, KKT residual %.2e)",
                       sweeps, lam, residual)
    return LassoFit(beta=beta, lam=lam, kkt_residual=residual, iterations=sweeps, converged=converged)


def lasso_lambda(c: float, d: int, n: int) -> float:
    """c * sqrt(log(d n) / n), n being the number of samples in the fit."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    return c * math.sqrt(math.log(d * n) / n)


def run_etc_lasso(instance: Instance, t1: int, c_lambda: float,
                  rng: np.random.Generator | None = None) -> BanditRunResult:
    """Explore uniformly for t1 rounds, fit one LASSO per arm, then commit greedily."""
    cfg = instance.config
    horizon, k = cfg.T, instance.K
    if not 1 <= t1 < horizon:
        raise ValueError(f"exploration length must lie in [1, T), got t1={t1} with T={horizon}")
    rng = rng if rng is not None else np.random.default_rng()

    arms = np.zeros(horizon, dtype=int)
    increments = np.zeros(horizon)
    errors = np.zeros(horizon)
    eps_series = np.zeros(horizon)
    samples: list[list[tuple[np.ndarray, float]]] = [[] for _ in range(k)]
    betas = np.zeros((k, cfg.d))
    zero_error = float(np.linalg.norm(instance.arms, axis=1).max())

    for i in range(t1):
        rnd = env.sample_round(instance, rng)
        arm = int(rng.integers(k))
        samples[arm].append((rnd.x, env.reward(instance, arm, rnd)))
        arms[i] = arm
        increments[i] = pseudo_regret(instance, rnd.x, arm)
        errors[i] = zero_error
        eps_series[i] = 1.0 / k

    for a in range(k):
        if not samples[a]:
            logger.warning("ETC-LASSO: arm %d never pulled in %d exploration rounds, using a zero fit",
                           a, t1)
            continue
        X = np.vstack([x for x, _ in samples[a]])
        y = np.array([r for _, r in samples[a]])
        betas[a] = lasso_fit(X, y, lasso_lambda(c_lambda, cfg.d, len(y))).beta

    committed_error = float(np.linalg.norm(betas - instance.arms, axis=1).max())
    for i in range(t1, horizon):
        rnd = env.sample_round(instance, rng)
        arm = int(np.argmax(betas @ rnd.x))
        arms[i] = arm
        increments[i] = pseudo_regret(instance, rnd.x, arm)
        errors[i] = committed_error

    return BanditRunResult(
        policy=f"etc_lasso_c{c_lambda:g}_t{t1}",
        arms=arms,
        cumulative_regret=np.cumsum(increments),
        pulls=np.bincount(arms, minlength=k),
        estimator_error_series=errors,
        eps=eps_series,
    )
