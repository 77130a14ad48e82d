import itertools

import numpy as np
import pytest

from services.environment import power_decay_covariance
from services.sparse_core import (
    SpectralProfile,
    SupportSet,
    hard_threshold,
    sparse_spectrum,
    support,
    support_recovery_rate,
)


def _best_s_term(v, s):
    best, best_err = None, np.inf
    for idx in itertools.combinations(range(v.size), s):
        approx = np.zeros_like(v)
        approx[list(idx)] = v[list(idx)]
        err = np.linalg.norm(v - approx)
        if err < best_err - 1e-15:
            best, best_err = approx, err
    return best


def test_hard_threshold_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = int(rng.integers(1, 13))
        s = int(rng.integers(1, min(d, 5) + 1))
        v = rng.standard_normal(d)
        np.testing.assert_array_equal(hard_threshold(v, s), _best_s_term(v, s))


def test_hard_threshold_ties_keep_lower_index():
    np.testing.assert_array_equal(hard_threshold([1.0, -1.0, 0.5], 1), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(hard_threshold([0.0, 2.0, -2.0, 2.0], 2), [0.0, 2.0, -2.0, 0.0])


def test_hard_threshold_s_at_least_dimension_is_identity():
    v = np.array([3.0, -1.0, 0.0])
    out = hard_threshold(v, 5)
    np.testing.assert_array_equal(out, v)
    assert out is not v


def test_hard_threshold_rejects_zero_sparsity():
    with pytest.raises(ValueError):
        hard_threshold([1.0, 2.0], 0)


def test_hard_threshold_output_is_s_sparse():
    v = np.arange(1.0, 11.0)
    assert np.count_nonzero(hard_threshold(v, 4)) == 4


def test_hard_threshold_is_idempotent_and_nested():
    rng = np.random.default_rng(9)
    for _ in range(200):
        d = int(rng.integers(2, 30))
        s = int(rng.integers(1, d + 1))
        s0 = int(rng.integers(1, s + 1))
        v = rng.standard_normal(d)
        once = hard_threshold(v, s)
        np.testing.assert_array_equal(hard_threshold(once, s), once)
        np.testing.assert_array_equal(hard_threshold(once, s0), hard_threshold(v, s0))


def test_support_set_operations():
    a = support([0.0, 1.0, 0.0, -2.0])
    b = SupportSet((1, 2))
    assert a.indices == (1, 3)
    assert 3 in a and 0 not in a
    assert a.intersection(b) == SupportSet((1,))
    assert SupportSet((1,)).issubset(a)
    with pytest.raises(ValueError):
        SupportSet((2, 1))


def test_support_recovery_rate():
    truth = np.array([1.0, 0.0, -1.0, 0.0, 0.5])
    assert support_recovery_rate(truth, truth) == 1.0
    assert support_recovery_rate(np.zeros(5), truth) == 0.0
    assert support_recovery_rate([0.0, 9.0, 2.0, 0.0, 0.0], truth) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        support_recovery_rate(truth, np.zeros(5))


def test_sparse_spectrum_identity():
    profile = sparse_spectrum(np.eye(6), 2)
    assert profile.phi_min == pytest.approx(1.0)
    assert profile.phi_max == pytest.approx(1.0)
    assert profile.kappa == pytest.approx(1.0)
    assert profile.exact


def test_sparse_spectrum_power_decay_pairs():
    alpha = 0.5
    profile = sparse_spectrum(power_decay_covariance(6, alpha), 1)
    # windows of size 2: eigenvalues 1 +- alpha^|i-j|, extremes at adjacent pairs
    assert profile.phi_min == pytest.approx(1 - alpha)
    assert profile.phi_max == pytest.approx(1 + alpha)


def test_sparse_spectrum_large_dimension_reports_bounds():
    sigma = power_decay_covariance(30, 0.5)
    profile = sparse_spectrum(sigma, 2)
    eigs = np.linalg.eigvalsh(sigma)
    assert not profile.exact
    assert profile.phi_min == pytest.approx(eigs[0])
    assert profile.phi_max == pytest.approx(eigs[-1])


def test_sparse_spectrum_rejects_bad_input():
    with pytest.raises(ValueError):
        sparse_spectrum(np.ones((2, 3)), 1)
    with pytest.raises(ValueError):
        sparse_spectrum(np.array([[1.0, 0.2], [0.0, 1.0]]), 1)


def test_spectral_profile_validation():
    with pytest.raises(ValueError):
        SpectralProfile(phi_min=0.0, phi_max=1.0, level=1)
    with pytest.raises(ValueError):
        SpectralProfile(phi_min=2.0, phi_max=1.0, level=1)
