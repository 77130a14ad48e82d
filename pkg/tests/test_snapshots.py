import numpy as np
import pytest

import config
from config import ConfigError
from services import environment as env
from services.online_ht import HtConfig, init, update
from storage.snapshots import (
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_state,
    save_instance,
    save_state,
)


def test_instance_round_trip(tmp_path, small_instance):
    path = save_instance(small_instance, tmp_path / "inst" / "instance.json")
    loaded = load_instance(path)
    assert loaded.config == small_instance.config
    np.testing.assert_allclose(loaded.arms, small_instance.arms, atol=1e-8)
    np.testing.assert_allclose(loaded.weights, small_instance.weights, atol=1e-8)
    np.testing.assert_allclose(loaded.covariance, small_instance.covariance, atol=1e-8)
    np.testing.assert_allclose(loaded.capacities, small_instance.capacities)
    assert loaded.d_prime == pytest.approx(small_instance.d_prime)


def test_instance_document_checks(small_instance):
    doc = instance_to_dict(small_instance)
    with pytest.raises(ConfigError):
        instance_from_dict({**doc, "schema_version": config.SCHEMA_VERSION + 1})
    with pytest.raises(ConfigError):
        instance_from_dict({k: v for k, v in doc.items() if k != "arms"})


def test_load_instance_rejects_garbage(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("[1, 2")
    with pytest.raises(ConfigError):
        load_instance(path)


def test_state_round_trip_continues_identically(tmp_path, small_instance, rng):
    state = init(HtConfig(d=small_instance.d, s0=2, eta=0.15), arm=1)
    for _ in range(25):
        rnd = env.sample_round(small_instance, rng)
        update(state, rnd.x, True, 1.0, env.reward(small_instance, 1, rnd))

    restored = load_state(save_state(state, tmp_path / "state.npz"))
    assert (restored.arm, restored.s, restored.s0, restored.t, restored.eta) == \
        (state.arm, state.s, state.s0, state.t, state.eta)
    np.testing.assert_array_equal(restored.cov_sum, state.cov_sum)
    np.testing.assert_array_equal(restored.mu, state.mu)

    rnd = env.sample_round(small_instance, rng)
    r = env.reward(small_instance, 1, rnd)
    update(state, rnd.x, True, 0.5, r)
    update(restored, rnd.x, True, 0.5, r)
    np.testing.assert_array_equal(restored.mu_s, state.mu_s)
