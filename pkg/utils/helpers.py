import math

import numpy as np


def format_duration(seconds: float) -> str:
    """Format duration in human-readable form."""
    if seconds < 60:
        return f"{seconds:.1f}s"
    if seconds < 3600:
        mins = int(seconds / 60)
        return f"{mins}m {int(seconds % 60)}s"
    hours = int(seconds / 3600)
    mins = int((seconds % 3600) / 60)
    return f"{hours}h {mins}m"


def format_metric(value: float) -> str:
    """Format a metric value compactly for log lines."""
    if value == 0 or not math.isfinite(value):
        return str(value)
    if abs(value) >= 1e4 or abs(value) < 1e-3:
        return f"{value:.3e}"
    return f"{value:.4f}"


def replication_seed(master_seed: int, replication: int) -> np.random.SeedSequence:
    """Independent seed stream for one replication of an experiment."""
    return np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(replication)])


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("loglog_slope needs two equally sized series of length >= 2")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_slope needs strictly positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def standard_error(values) -> float:
    """Sample standard deviation over sqrt(n); 0 for a single value."""
    values = np.asarray(values, dtype=float)
    if values.size <= 1:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))
