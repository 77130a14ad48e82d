import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

import config

logger = logging.getLogger("sparse_bwk")


@dataclass(frozen=True)
class SupportSet:
    """Sorted coordinate indices of the nonzero entries of a vector."""
    indices: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("support indices must be strictly increasing")
        if self.indices and self.indices[0] < 0:
            raise ValueError("support indices must be nonnegative")

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, item: int) -> bool:
        return item in set(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def intersection(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(tuple(sorted(set(self.indices) & set(other.indices))))

    def issubset(self, other: "SupportSet") -> bool:
        return set(self.indices) <= set(other.indices)


@dataclass(frozen=True)
class SpectralProfile:
    """Sparse extreme eigenvalues of a covariance over supports of size ceil(2s).

    When `exact` is False the values are full-matrix eigenvalue bounds
    (phi_min is a lower bound, phi_max an upper bound).
    """
    phi_min: float
    phi_max: float
    level: int
    exact: bool = True

    def __post_init__(self):
        if self.phi_min <= 0:
            raise ValueError(f"phi_min must be positive, got {self.phi_min}")
        if self.phi_max < self.phi_min:
            raise ValueError("phi_max must be >= phi_min")

    @property
    def kappa(self) -> float:
        return self.phi_max / self.phi_min


def hard_threshold(v, s: int) -> np.ndarray:
    """Keep the s largest-magnitude entries of v and zero the rest.

    Ties at the cut keep the lower index.
    """
    if s < 1:
        raise ValueError(f"sparsity must be >= 1, got {s}")
    v = np.asarray(v, dtype=float)
    if s >= v.size:
        return v.copy()
    # stable sort on -|v| keeps lower indices first among equal magnitudes
    keep = np.argsort(-np.abs(v), kind="stable")[:s]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def support(v) -> SupportSet:
    return SupportSet(tuple(int(i) for i in np.flatnonzero(np.asarray(v))))


def support_recovery_rate(estimate, truth) -> float:
    """|supp(estimate) ∩ supp(truth)| / |supp(truth)|."""
    true_supp = support(truth)
    if len(true_supp) == 0:
        raise ValueError("truth must have at least one nonzero entry")
    return len(support(estimate).intersection(true_supp)) / len(true_supp)


def sparse_spectrum(sigma, s: int) -> SpectralProfile:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=config.HT_SYMMETRY_TOL):
        raise ValueError("sigma must be symmetric")
    d = sigma.shape[0]
    window = min(d, math.ceil(2 * s))

    if d > config.EXACT_SPECTRUM_MAX_DIM:
        eigs = linalg.eigvalsh(sigma)
        logger.debug("sparse_spectrum: d=%d too large for enumeration, using full-matrix bounds", d)
        return SpectralProfile(phi_min=float(eigs[0]), phi_max=float(eigs[-1]), level=s, exact=False)

    # interlacing: extremes over supports of size <= window are attained at size == window
    phi_min, phi_max = math.inf, -math.inf
    for idx in itertools.combinations(range(d), window):
        eigs = linalg.eigvalsh(sigma[np.ix_(idx, idx)])
        phi_min = min(phi_min, float(eigs[0]))
        phi_max = max(phi_max, float(eigs[-1]))
    return SpectralProfile(phi_min=phi_min, phi_max=phi_max, level=s, exact=True)
