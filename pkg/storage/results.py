import logging
from pathlib import Path

import numpy as np
import pandas as pd

from services.bandit import BanditRunResult
from services.bwk_primal_dual import BwkRunResult
from services.estimation import EstimationRunResult

logger = logging.getLogger("sparse_bwk")

FLOAT_FORMAT = "%.12g"


def bwk_trajectory_frame(result: BwkRunResult) -> pd.DataFrame:
    m = result.consumption.shape[1]
    frame = pd.DataFrame({
        "round": np.arange(1, result.horizon + 1),
        "arm": result.arms,
        "reward": result.rewards,
    })
    for i in range(m):
        frame[f"consumption_{i + 1}"] = result.consumption[:, i]
    for i in range(m):
        frame[f"eta_{i + 1}"] = result.etas[:, i]
    frame["eps"] = result.eps
    frame["est_error_max"] = result.estimator_error_series
    return frame


def bandit_trajectory_frame(result: BanditRunResult) -> pd.DataFrame:
    return pd.DataFrame({
        "round": np.arange(1, result.arms.size + 1),
        "arm": result.arms,
        "pseudo_regret_cum": result.cumulative_regret,
        "eps": result.eps,
        "est_error_max": result.estimator_error_series,
    })


def estimation_trajectory_frame(result: EstimationRunResult) -> pd.DataFrame:
    return pd.DataFrame({
        "round": np.arange(1, result.errors.size + 1),
        "sq_error": result.errors,
        "support_recovery": result.recovery,
    })


def raw_frame(grid, raw: dict[str, np.ndarray], grid_name: str = "t") -> pd.DataFrame:
    """Long format: one row per (replication, grid point) with one column per metric."""
    grid = np.asarray(grid)
    names = sorted(raw)
    n_reps = raw[names[0]].shape[0] if names else 0
    frame = pd.DataFrame({
        "replication": np.repeat(np.arange(n_reps), grid.size),
        grid_name: np.tile(grid, n_reps),
    })
    for name in names:
        frame[name] = raw[name].reshape(-1)
    return frame


def aggregate_frame(grid, means: dict[str, np.ndarray], stderrs: dict[str, np.ndarray],
                    n_ok: int, grid_name: str = "t") -> pd.DataFrame:
    rows = []
    for name in sorted(means):
        for g, mu, se in zip(grid, means[name], stderrs[name]):
            rows.append({"metric": name, grid_name: g, "mean": mu, "stderr": se, "n": n_ok})
    return pd.DataFrame(rows, columns=["metric", grid_name, "mean", "stderr", "n"])


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path)
