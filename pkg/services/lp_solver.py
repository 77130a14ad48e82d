import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, sparse

import config

logger = logging.getLogger("sparse_bwk")


class SolverError(RuntimeError):
    """Raised when the simplex exhausts its iteration budget or hits a singular basis."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpProblem:
    """maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper."""
    objective: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = self.objective.size
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.a_ub.shape[0] != self.b_ub.size or self.a_eq.shape[0] != self.b_eq.size:
            raise ValueError("constraint matrix and right-hand side sizes differ")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if not np.all(np.isfinite(self.lower)):
            raise ValueError("lower bounds must be finite")

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass
class LpSolution:
    status: LpStatus
    objective_value: float
    x: np.ndarray | None
    dual_ub: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    iterations: int = 0


def make_problem(objective, a_ub=None, b_ub=None, a_eq=None, b_eq=None,
                 lower=None, upper=None) -> LpProblem:
    c = np.asarray(objective, dtype=float)
    n = c.size
    return LpProblem(
        objective=c,
        a_ub=np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float),
        b_ub=np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float),
        a_eq=np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float),
        b_eq=np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float),
        lower=np.zeros(n) if lower is None else np.asarray(lower, dtype=float),
        upper=np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float),
    )


# --- Bounded-variable primal simplex ---

class _BoundedSimplex:
    """Primal simplex on  max c.x, A x = b, 0 <= x <= u  with Bland's rule.

    Nonbasic variables sit at a bound (0 or a finite upper); the basis is
    refactorized with LU every iteration.
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, upper: np.ndarray, basis: list[int]):
        self.a = a
        self.b = b
        self.upper = upper
        self.basis = list(basis)
        self.at_upper = np.zeros(a.shape[1], dtype=bool)
        self.iterations = 0

    def _nonbasic_values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = 0.0
        return x

    def _factor(self):
        try:
            return linalg.lu_factor(self.a[:, self.basis], check_finite=False)
        except (ValueError, linalg.LinAlgError) as e:
            raise SolverError(f"basis factorization failed: {e}") from e

    def values(self) -> np.ndarray:
        x = self._nonbasic_values()
        x[self.basis] = linalg.lu_solve(self._factor(), self.b - self.a @ x)
        return x

    def _ratio_test(self, x_b: np.ndarray, g: np.ndarray, entering: int) -> tuple[float, int, bool]:
        """Step length, leaving basis position (-1 = bound flip) and its target bound."""
        tol = config.LP_PIVOT_TOL
        theta = self.upper[entering]
        leave_pos, to_upper = -1, False
        for pos, var in enumerate(self.basis):
            if g[pos] > tol:
                ratio, hits_upper = x_b[pos] / g[pos], False
            elif g[pos] < -tol and np.isfinite(self.upper[var]):
                ratio, hits_upper = (self.upper[var] - x_b[pos]) / -g[pos], True
            else:
                continue
            ratio = max(ratio, 0.0)
            # Bland: among tied blocking variables the lowest index leaves
            if ratio < theta - tol or (
                ratio <= theta + tol and leave_pos >= 0 and var < self.basis[leave_pos]
            ):
                theta, leave_pos, to_upper = ratio, pos, hits_upper
        return theta, leave_pos, to_upper

    def run(self, c: np.ndarray) -> tuple[LpStatus, np.ndarray]:
        tol = config.LP_PIVOT_TOL
        n = self.a.shape[1]
        while True:
            if self.iterations >= config.LP_MAX_ITER:
                raise SolverError(f"simplex iteration limit {config.LP_MAX_ITER} reached")
            self.iterations += 1

            lu = self._factor()
            x_b = linalg.lu_solve(lu, self.b - self.a @ self._nonbasic_values())
            y = linalg.lu_solve(lu, c[self.basis], trans=1)
            reduced = c - self.a.T @ y

            movable = np.ones(n, dtype=bool)
            movable[self.basis] = False
            movable &= self.upper > 0
            improving = movable & (
                (~self.at_upper & (reduced > tol)) | (self.at_upper & (reduced < -tol))
            )
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return LpStatus.OPTIMAL, y

            # Bland: lowest-index entering variable
            j = int(candidates[0])
            direction = -1.0 if self.at_upper[j] else 1.0
            g = direction * linalg.lu_solve(lu, self.a[:, j])
            theta, leave_pos, to_upper = self._ratio_test(x_b, g, j)

            if not np.isfinite(theta):
                return LpStatus.UNBOUNDED, y
            if leave_pos < 0:
                self.at_upper[j] = not self.at_upper[j]
                continue

            leaving = self.basis[leave_pos]
            self.at_upper[leaving] = to_upper
            self.at_upper[j] = False
            self.basis[leave_pos] = j


def solve(problem: LpProblem) -> LpSolution:
    """Solve a dense LP with the two-phase bounded-variable simplex."""
    n = problem.n_vars
    p = problem.a_ub.shape[0]
    q = problem.a_eq.shape[0]
    rows = p + q
    lower = problem.lower
    upper = problem.upper - lower

    if rows == 0:
        c = problem.objective
        if np.any((c > 0) & ~np.isfinite(upper)):
            return LpSolution(LpStatus.UNBOUNDED, np.inf, None)
        x = lower + np.where(c > 0, upper, 0.0)
        return LpSolution(LpStatus.OPTIMAL, float(c @ x), x, np.zeros(0), np.zeros(0))

    # standard form over [x - lower | slacks | artificials], rows signed so b >= 0
    a = np.zeros((rows, n + p + rows))
    a[:p, :n] = problem.a_ub
    a[p:, :n] = problem.a_eq
    a[:p, n:n + p] = np.eye(p)
    b = np.concatenate([problem.b_ub, problem.b_eq]) - a[:, :n] @ lower
    sign = np.where(b < 0, -1.0, 1.0)
    a[:, :n + p] *= sign[:, None]
    b = b * sign
    a[:, n + p:] = np.eye(rows)

    bounds = np.concatenate([upper, np.full(p + rows, np.inf)])
    simplex = _BoundedSimplex(a, b, bounds, list(range(n + p, n + p + rows)))

    phase1 = np.zeros(a.shape[1])
    phase1[n + p:] = -1.0
    simplex.run(phase1)
    infeasibility = float(simplex.values()[n + p:].sum())
    if infeasibility > config.LP_FEAS_TOL:
        return LpSolution(LpStatus.INFEASIBLE, float("nan"), None, iterations=simplex.iterations)

    # artificials stay in the tableau pinned to zero
    simplex.upper = bounds.copy()
    simplex.upper[n + p:] = 0.0
    phase2 = np.zeros(a.shape[1])
    phase2[:n] = problem.objective
    status, y = simplex.run(phase2)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, np.inf, None, iterations=simplex.iterations)

    x = simplex.values()[:n] + lower
    y = y * sign
    return LpSolution(
        status=LpStatus.OPTIMAL,
        objective_value=float(problem.objective @ x),
        x=x,
        dual_ub=np.maximum(y[:p], 0.0),
        dual_eq=y[p:],
        iterations=simplex.iterations,
    )


def lagrangian_bound(problem: LpProblem, dual_ub, dual_eq) -> float:
    """Upper bound on the LP value from prices dual_ub >= 0 and free dual_eq."""
    dual_ub = np.maximum(np.asarray(dual_ub, dtype=float), 0.0)
    dual_eq = np.asarray(dual_eq, dtype=float)
    reduced = problem.objective - problem.a_ub.T @ dual_ub - problem.a_eq.T @ dual_eq
    if np.any((reduced > 0) & ~np.isfinite(problem.upper)):
        return np.inf
    upper = np.where(np.isfinite(problem.upper), problem.upper, 0.0)
    best = np.where(reduced > 0, reduced * upper, reduced * problem.lower)
    return float(dual_ub @ problem.b_ub + dual_eq @ problem.b_eq + best.sum())


def dump_problem(problem: LpProblem) -> str:
    """Plain-text tableau rendering for debugging."""
    def row_text(values) -> str:
        return " ".join(f"{v:10.4g}" for v in values)

    lines = ["max  " + row_text(problem.objective)]
    for row, rhs in zip(problem.a_ub, problem.b_ub):
        lines.append(f"ub   {row_text(row)}  <= {rhs:10.4g}")
    for row, rhs in zip(problem.a_eq, problem.b_eq):
        lines.append(f"eq   {row_text(row)}  == {rhs:10.4g}")
    lines.append("lo   " + row_text(problem.lower))
    lines.append("hi   " + row_text(problem.upper))
    return "\n".join(lines)


# --- Allocation LPs (per-round simplex rows + knapsack rows) ---

@dataclass
class AllocationData:
    """Per-round rewards (n x K) and costs (n x K x m) of the real arms.

    The null arm is implicit. Objective and consumption are both multiplied by `scale`.
    """
    rewards: np.ndarray
    costs: np.ndarray
    capacities: np.ndarray
    scale: float = 1.0

    @property
    def n_rounds(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_arms(self) -> int:
        return self.rewards.shape[1]

    @property
    def n_vars(self) -> int:
        return self.n_rounds * (self.n_arms + 1)


@dataclass
class AllocationValue:
    value: float
    method: str
    prices: np.ndarray | None = field(default=None, repr=False)


def allocation_data(features, mus, weights, capacities, scale: float = 1.0,
                    d_prime: float | None = None) -> AllocationData:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] < 1:
        raise ValueError("an allocation LP needs at least one round")
    mus = np.asarray(mus, dtype=float)
    weights = np.asarray(weights, dtype=float)
    costs = np.einsum("kmd,nd->nkm", weights, features)
    costs = np.clip(costs, 0.0, np.inf if d_prime is None else d_prime)
    return AllocationData(rewards=features @ mus.T, costs=costs,
                          capacities=np.asarray(capacities, dtype=float), scale=scale)


def _allocation_arrays(data: AllocationData, as_sparse: bool):
    n, k = data.rewards.shape
    m = data.capacities.size
    arms = k + 1
    c = np.zeros((n, arms))
    c[:, :k] = data.scale * data.rewards
    a_ub = np.zeros((m, n, arms))
    a_ub[:, :, :k] = data.scale * np.transpose(data.costs, (2, 0, 1))
    a_ub = a_ub.reshape(m, -1)
    # round t owns columns t*(K+1) .. t*(K+1)+K
    a_eq = sparse.kron(sparse.eye(n), np.ones((1, arms)), format="csr")
    if as_sparse:
        return c.reshape(-1), sparse.csr_matrix(a_ub), a_eq
    return c.reshape(-1), a_ub, a_eq.toarray()


def allocation_problem(data: AllocationData) -> LpProblem:
    """Dense LP with variables y[t, a], a = 0..K (K = null arm), row-major by round."""
    c, a_ub, a_eq = _allocation_arrays(data, as_sparse=False)
    return make_problem(
        objective=c,
        a_ub=a_ub,
        b_ub=data.capacities,
        a_eq=a_eq,
        b_eq=np.ones(data.n_rounds),
        lower=np.zeros(c.size),
        upper=np.ones(c.size),
    )


def build_vhat_lp(features, mu_hats, weights, capacities, horizon: int,
                  d_prime: float | None = None) -> LpProblem:
    """Estimated-benchmark LP on the first T0 rounds, scaled by T / T0."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    scale = horizon / features.shape[0]
    return allocation_problem(allocation_data(features, mu_hats, weights, capacities, scale, d_prime))


def build_hindsight_lp(features, true_mus, weights, capacities,
                       d_prime: float | None = None) -> LpProblem:
    """Fractional offline allocation on the realized feature sequence."""
    return allocation_problem(allocation_data(features, true_mus, weights, capacities, 1.0, d_prime))


def _solve_allocation_highs(data: AllocationData) -> AllocationValue:
    c, a_ub, a_eq = _allocation_arrays(data, as_sparse=True)
    res = optimize.linprog(
        -c, A_ub=a_ub, b_ub=data.capacities, A_eq=a_eq, b_eq=np.ones(data.n_rounds),
        bounds=(0.0, 1.0), method="highs",
    )
    if res.status != 0:
        raise SolverError(f"allocation LP failed: {res.message}")
    prices = -res.ineqlin.marginals if res.ineqlin is not None else None
    return AllocationValue(value=float(-res.fun), method="highs", prices=prices)


def solve_allocation(data: AllocationData, method: str = "auto") -> AllocationValue:
    """Optimal value of an allocation LP: dense simplex when small, sparse HiGHS otherwise."""
    if method not in ("auto", "simplex", "highs"):
        raise ValueError(f"unknown allocation method {method!r}")
    if method == "simplex" or (method == "auto" and data.n_vars <= config.DENSE_LP_MAX_VARS):
        sol = solve(allocation_problem(data))
        if sol.status is not LpStatus.OPTIMAL:
            raise SolverError(f"allocation LP ended {sol.status.value}")
        return AllocationValue(value=sol.objective_value, method="simplex", prices=sol.dual_ub)
    return _solve_allocation_highs(data)
