import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from services.environment import InstanceConfig, generate_instance  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config():
    return InstanceConfig(d=8, K=3, m=2, T=200, s0=2, sigma=0.1, budget_ratio=(0.3,), seed=7)


@pytest.fixture
def small_instance(small_config):
    return generate_instance(small_config)
