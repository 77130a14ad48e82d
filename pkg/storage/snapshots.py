import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np
import ujson

import config
from config import ConfigError
from services.environment import Instance, InstanceConfig
from services.online_ht import OnlineHtState

logger = logging.getLogger("sparse_bwk")


def instance_to_dict(instance: Instance) -> dict:
    cfg = asdict(instance.config)
    cfg["budget_ratio"] = list(cfg["budget_ratio"])
    return {
        "schema_version": config.SCHEMA_VERSION,
        "config": cfg,
        "arms": instance.arms.tolist(),
        "weights": instance.weights.tolist(),
        "covariance": instance.covariance.tolist(),
        "capacities": instance.capacities.tolist(),
        "d_prime": instance.d_prime,
    }


def instance_from_dict(data: dict) -> Instance:
    version = data.get("schema_version")
    if version != config.SCHEMA_VERSION:
        raise ConfigError(f"instance schema_version {version!r} unsupported "
                          f"(expected {config.SCHEMA_VERSION})")
    try:
        cfg = dict(data["config"])
        cfg["budget_ratio"] = tuple(cfg["budget_ratio"])
        return Instance(
            arms=np.asarray(data["arms"], dtype=float),
            weights=np.asarray(data["weights"], dtype=float),
            covariance=np.asarray(data["covariance"], dtype=float),
            capacities=np.asarray(data["capacities"], dtype=float),
            config=InstanceConfig(**cfg),
            d_prime=float(data["d_prime"]),
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed instance document: {e}") from e


def save_instance(instance: Instance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ujson.dumps(instance_to_dict(instance)))
    logger.debug("Instance saved to %s", path)
    return path


def load_instance(path: str | Path) -> Instance:
    try:
        data = ujson.loads(Path(path).read_text())
    except ValueError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    return instance_from_dict(data)


# --- Estimator state ---

def save_state(state: OnlineHtState, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez(
            fh,
            header=np.array([state.arm, state.s, state.s0, state.t], dtype=np.int64),
            eta=np.array([state.eta]),
            cov_sum=state.cov_sum,
            reward_sum=state.reward_sum,
            mu=state.mu,
            mu_s=state.mu_s,
        )
    return path


def load_state(path: str | Path) -> OnlineHtState:
    with np.load(Path(path)) as data:
        arm, s, s0, t = (int(v) for v in data["header"])
        return OnlineHtState(
            arm=arm, s=s, s0=s0, eta=float(data["eta"][0]), t=t,
            cov_sum=data["cov_sum"].copy(),
            reward_sum=data["reward_sum"].copy(),
            mu=data["mu"].copy(),
            mu_s=data["mu_s"].copy(),
        )
