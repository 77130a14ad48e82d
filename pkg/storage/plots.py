import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger("sparse_bwk")

# fixed ids and no timestamp keep SVG output byte-stable
plt.rcParams["svg.hashsalt"] = "sparse_bwk"


def plot_curves(grid, curves: dict[str, tuple[np.ndarray, np.ndarray]], path: str | Path,
                xlabel: str, ylabel: str, title: str = "", loglog: bool = False) -> Path:
    """One line per curve with a +-1 standard error band."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = np.asarray(grid, dtype=float)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, (mean, stderr) in curves.items():
        mean = np.asarray(mean, dtype=float)
        stderr = np.asarray(stderr, dtype=float)
        ax.plot(grid, mean, marker="o", markersize=3, label=label)
        ax.fill_between(grid, mean - stderr, mean + stderr, alpha=0.2)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Figure written to %s", path)
    return path
