import asyncio
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import ujson

import config
from config import ConfigError
from services.bandit import data_regime, run_bandit
from services.baselines import run_etc_lasso
from services.bwk_primal_dual import MODES as BWK_MODES, BwkConfig, run_bwk
from services.environment import Instance, InstanceConfig, generate_instance
from services.estimation import PROPENSITY_MODES, run_estimation
from services.online_ht import ht_config_for
from storage import plots, results, snapshots
from utils.helpers import format_duration, format_metric, replication_seed, standard_error

logger = logging.getLogger("sparse_bwk")

KINDS = ("estimation", "bandit", "bwk")


@dataclass
class ExperimentSpec:
    kind: str
    instance: InstanceConfig
    t_grid: tuple[int, ...]
    replications: int
    policy: dict = field(default_factory=dict)
    output_dir: str = config.OUTPUT_DIR
    master_seed: int = config.DEFAULT_MASTER_SEED
    threads: int = config.DEFAULT_THREADS
    name: str = "experiment"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}, expected one of {KINDS}")
        self.t_grid = tuple(int(t) for t in self.t_grid)
        if not self.t_grid:
            raise ConfigError("t_grid must not be empty")
        if self.t_grid[0] < 1 or any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise ConfigError(f"t_grid must be strictly increasing positive integers, got {self.t_grid}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        self._check_policy()

    def _check_policy(self):
        allowed = {
            "estimation": ("propensity_modes", PROPENSITY_MODES),
            "bwk": ("modes", BWK_MODES),
        }
        if self.kind in allowed:
            key, choices = allowed[self.kind]
            unknown = [v for v in self.policy.get(key, []) if v not in choices]
            if unknown:
                raise ConfigError(f"policy.{key} has unknown entries {unknown}, expected {choices}")

    @property
    def horizon(self) -> int:
        return self.t_grid[-1]

    @property
    def grid_name(self) -> str:
        return "T" if self.kind == "bwk" else "t"


def spec_to_dict(spec: ExperimentSpec) -> dict:
    inst = asdict(spec.instance)
    inst["budget_ratio"] = list(inst["budget_ratio"])
    inst.pop("T")
    return {
        "schema_version": config.SCHEMA_VERSION,
        "name": spec.name,
        "kind": spec.kind,
        "instance": inst,
        "t_grid": list(spec.t_grid),
        "replications": spec.replications,
        "policy": spec.policy,
        "master_seed": spec.master_seed,
        "threads": spec.threads,
        "output_dir": spec.output_dir,
    }


def spec_from_dict(data: dict) -> ExperimentSpec:
    version = data.get("schema_version")
    if version != config.SCHEMA_VERSION:
        raise ConfigError(f"schema_version {version!r} unsupported (expected {config.SCHEMA_VERSION})")
    missing = [key for key in ("kind", "instance", "t_grid") if key not in data]
    if missing:
        raise ConfigError(f"experiment file is missing {', '.join(missing)}")
    kind = data["kind"]
    default_reps = config.DEFAULT_REPS_ESTIMATION if kind == "estimation" else config.DEFAULT_REPS_BANDIT
    t_grid = data["t_grid"]
    try:
        inst = dict(data["instance"])
        inst.pop("T", None)
        if "budget_ratio" in inst and not isinstance(inst["budget_ratio"], (int, float)):
            inst["budget_ratio"] = tuple(inst["budget_ratio"])
        instance = InstanceConfig(T=int(max(t_grid)), **inst)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid instance section: {e}") from e
    return ExperimentSpec(
        kind=kind,
        instance=instance,
        t_grid=tuple(t_grid),
        replications=int(data.get("replications", default_reps)),
        policy=dict(data.get("policy", {})),
        output_dir=data.get("output_dir", config.OUTPUT_DIR),
        master_seed=int(data.get("master_seed", config.DEFAULT_MASTER_SEED)),
        threads=int(data.get("threads", config.DEFAULT_THREADS)),
        name=data.get("name", kind),
    )


def load_document(path: str | Path) -> dict:
    """Raw experiment document; unreadable or malformed files raise ConfigError."""
    try:
        data = ujson.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read experiment file {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def load_spec(path: str | Path) -> ExperimentSpec:
    return spec_from_dict(load_document(path))


def relative_regret(regret: float, opt: float) -> float:
    if opt <= 0:
        raise ValueError(f"benchmark value must be positive, got {opt}")
    return regret / opt


@dataclass
class ReplicationOutcome:
    replication: int
    metrics: dict[str, np.ndarray] = field(default_factory=dict)
    instance: Instance | None = None
    trajectories: dict[str, object] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class AggregateResult:
    """Per-replication metric values over the grid, with their mean and standard error."""
    kind: str
    grid: np.ndarray
    raw: dict[str, np.ndarray]                 # metric -> replications_ok x len(grid)
    replications: list[int] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)
    outputs: list[Path] = field(default_factory=list)

    @property
    def metrics(self) -> list[str]:
        return sorted(self.raw)

    @property
    def n_ok(self) -> int:
        return len(self.replications)

    def mean(self, metric: str) -> np.ndarray:
        return self.raw[metric].mean(axis=0)

    def stderr(self, metric: str) -> np.ndarray:
        values = self.raw[metric]
        return np.array([standard_error(values[:, j]) for j in range(values.shape[1])])


# --- Replications ---

def _streams(spec: ExperimentSpec, r: int) -> list[np.random.SeedSequence]:
    """[instance, policy runs, one per grid point]."""
    return replication_seed(spec.master_seed, r).spawn(2 + len(spec.t_grid))


def _instance(spec: ExperimentSpec, seed: np.random.SeedSequence, horizon: int):
    return generate_instance(replace(spec.instance, T=horizon), rng=np.random.default_rng(seed))


def _estimation_replication(spec: ExperimentSpec, r: int) -> ReplicationOutcome:
    policy = spec.policy
    streams = _streams(spec, r)
    instance = _instance(spec, streams[0], spec.horizon)
    grid = np.asarray(spec.t_grid)
    lasso_cs = tuple(policy.get("lasso_cs", config.LASSO_C_GRID))
    modes = policy.get("propensity_modes", ["full"])
    ht_config = ht_config_for(instance, policy.get("eta"), policy.get("rho", config.HT_RHO),
                              float(policy.get("step_scale", 1.0)))

    outcome = ReplicationOutcome(r, instance=instance)
    for mode in modes:
        res = run_estimation(instance, np.random.default_rng(streams[1]), propensity_mode=mode,
                             p_scale=float(policy.get("p_scale", 1.0)), checkpoints=grid,
                             lasso_cs=lasso_cs, ht_config=ht_config)
        outcome.metrics[f"{mode}_online_ht_sq_error"] = res.errors[grid - 1]
        outcome.metrics[f"{mode}_online_ht_recovery"] = res.recovery[grid - 1]
        for c in lasso_cs:
            outcome.metrics[f"{mode}_lasso_c{c:g}_sq_error"] = res.lasso_errors[c]
            outcome.metrics[f"{mode}_lasso_c{c:g}_recovery"] = res.lasso_recovery[c]
        outcome.trajectories[mode] = results.estimation_trajectory_frame(res)
    return outcome


def _bandit_replication(spec: ExperimentSpec, r: int) -> ReplicationOutcome:
    policy = spec.policy
    streams = _streams(spec, r)
    instance = _instance(spec, streams[0], spec.horizon)
    grid = np.asarray(spec.t_grid)
    ht_config = ht_config_for(instance, policy.get("eta"), policy.get("rho", config.HT_RHO),
                              float(policy.get("step_scale", 1.0)))
    scale = float(policy.get("eps_scale", 1.0))

    outcome = ReplicationOutcome(r, instance=instance)
    runs = [("online_ht_eps", "schedule")]
    if policy.get("greedy", True):
        runs.append(("online_ht_greedy", "zero"))
    for label, eps_mode in runs:
        res = run_bandit(instance, eps_mode, scale, np.random.default_rng(streams[1]), ht_config)
        outcome.metrics[f"regret_{label}"] = res.cumulative_regret[grid - 1]
        outcome.metrics[f"est_error_{label}"] = res.estimator_error_series[grid - 1]
        outcome.trajectories[label] = results.bandit_trajectory_frame(res)

    fractions = policy.get("etc_fractions", list(config.ETC_FRACTIONS))
    cs = policy.get("lasso_cs", list(config.LASSO_C_GRID))
    for f in fractions:
        for c in cs:
            values = np.zeros(grid.size)
            for j, horizon in enumerate(grid):
                inst_t = _instance(spec, streams[0], int(horizon))
                t1 = min(int(horizon) - 1, max(1, round(f * horizon ** (2 / 3))))
                res = run_etc_lasso(inst_t, t1, c, np.random.default_rng(streams[2 + j]))
                values[j] = res.final_regret
            outcome.metrics[f"regret_etc_f{f:g}_c{c:g}"] = values
    return outcome


def _bwk_replication(spec: ExperimentSpec, r: int) -> ReplicationOutcome:
    policy = spec.policy
    streams = _streams(spec, r)
    modes = policy.get("modes", list(BWK_MODES))
    bwk_config = BwkConfig(
        z=policy.get("z"),
        delta=policy.get("delta"),
        t0=policy.get("t0"),
        eps_scale=float(policy.get("eps_scale", 1.0)),
        r_max=policy.get("r_max"),
        eta=policy.get("eta"),
        step_scale=float(policy.get("step_scale", 1.0)),
        rho=float(policy.get("rho", config.HT_RHO)),
    )

    outcome = ReplicationOutcome(r)
    for mode in modes:
        for name in ("regret", "relative_regret", "collected", "hindsight", "tau"):
            outcome.metrics[f"{name}_{mode}"] = np.zeros(len(spec.t_grid))
    for j, horizon in enumerate(spec.t_grid):
        instance = _instance(spec, streams[0], horizon)
        for mode in modes:
            res = run_bwk(instance, bwk_config, mode, np.random.default_rng(streams[2 + j]))
            outcome.metrics[f"regret_{mode}"][j] = res.regret
            outcome.metrics[f"relative_regret_{mode}"][j] = relative_regret(res.regret, res.hindsight_value)
            outcome.metrics[f"collected_{mode}"][j] = res.collected
            outcome.metrics[f"hindsight_{mode}"][j] = res.hindsight_value
            outcome.metrics[f"tau_{mode}"][j] = res.tau
            outcome.trajectories[f"{mode}_T{horizon}"] = results.bwk_trajectory_frame(res)
    outcome.instance = instance
    return outcome


_REPLICATIONS = {
    "estimation": _estimation_replication,
    "bandit": _bandit_replication,
    "bwk": _bwk_replication,
}


def run_replication(spec: ExperimentSpec, r: int) -> ReplicationOutcome:
    """One replication; failures are captured on the outcome instead of raised."""
    started = time.monotonic()
    try:
        outcome = _REPLICATIONS[spec.kind](spec, r)
    except Exception as e:
        logger.error("%s: replication %d failed: %s", spec.name, r, e)
        return ReplicationOutcome(r, error=f"{type(e).__name__}: {e}")
    logger.info("%s: replication %d done in %s", spec.name, r,
                format_duration(time.monotonic() - started))
    return outcome


# --- Experiment ---

async def run_experiment_async(spec: ExperimentSpec) -> AggregateResult:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=spec.threads) as pool:
        tasks = [loop.run_in_executor(pool, run_replication, spec, r)
                 for r in range(spec.replications)]
        # gather keeps replication order regardless of completion order
        outcomes = await asyncio.gather(*tasks)
    return _aggregate(spec, outcomes)


def run_experiment(spec: ExperimentSpec) -> AggregateResult:
    if spec.kind != "estimation":
        cfg = spec.instance
        logger.info("%s: d=%d s0=%d T=%d is %s", spec.name, cfg.d, cfg.s0, spec.horizon,
                    data_regime(cfg.d, spec.horizon, cfg.s0))
    started = time.monotonic()
    agg = asyncio.run(run_experiment_async(spec))
    logger.info("%s: %d/%d replications succeeded in %s", spec.name, agg.n_ok,
                spec.replications, format_duration(time.monotonic() - started))
    return agg


def _aggregate(spec: ExperimentSpec, outcomes: list[ReplicationOutcome]) -> AggregateResult:
    ok = [o for o in outcomes if o.ok]
    failures = {o.replication: o.error for o in outcomes if not o.ok}
    if not ok:
        raise RuntimeError(f"{spec.name}: all {spec.replications} replications failed")
    if failures:
        logger.warning("%s: aggregating over %d of %d replications (failed: %s)", spec.name,
                       len(ok), spec.replications, sorted(failures))

    raw = {name: np.vstack([o.metrics[name] for o in ok]) for name in ok[0].metrics}
    agg = AggregateResult(
        kind=spec.kind,
        grid=np.asarray(spec.t_grid),
        raw=raw,
        replications=[o.replication for o in ok],
        failures=failures,
    )
    agg.outputs = write_outputs(spec, agg, ok)
    return agg


# --- Artifacts ---

_FIGURES = {
    "estimation": [
        ("error_vs_t.svg", "_sq_error", "squared l2 error", True),
        ("recovery_vs_t.svg", "_recovery", "support recovery rate", False),
    ],
    "bandit": [
        ("regret_vs_t.svg", "regret_", "cumulative regret", False),
    ],
    "bwk": [
        ("regret_vs_T.svg", "regret_", "regret", False),
        ("relative_regret_vs_T.svg", "relative_regret_", "relative regret", False),
    ],
}


def _matches(metric: str, key: str) -> bool:
    if key.startswith("_"):
        return metric.endswith(key)
    return metric.startswith(key) and not (key == "regret_" and metric.startswith("relative_"))


def write_outputs(spec: ExperimentSpec, agg: AggregateResult,
                  outcomes: list[ReplicationOutcome]) -> list[Path]:
    out = Path(spec.output_dir) / spec.name
    grid_name = spec.grid_name
    written = []

    raw = results.raw_frame(agg.grid, agg.raw, grid_name)
    raw["replication"] = np.repeat(agg.replications, agg.grid.size)
    written.append(results.write_csv(raw, out / "raw.csv"))
    means = {name: agg.mean(name) for name in agg.metrics}
    stderrs = {name: agg.stderr(name) for name in agg.metrics}
    written.append(results.write_csv(
        results.aggregate_frame(agg.grid, means, stderrs, agg.n_ok, grid_name), out / "aggregate.csv",
    ))

    if spec.policy.get("write_trajectories", True):
        for o in outcomes:
            for label, frame in o.trajectories.items():
                written.append(results.write_csv(frame, out / "trajectories" / f"rep{o.replication:03d}_{label}.csv"))

    # off by default: a d x d covariance per replication gets large
    if spec.policy.get("write_instances", False):
        for o in outcomes:
            written.append(snapshots.save_instance(o.instance, out / "instances" / f"rep{o.replication:03d}.json"))

    for filename, key, ylabel, loglog in _FIGURES[spec.kind]:
        curves = {name: (means[name], stderrs[name]) for name in agg.metrics if _matches(name, key)}
        if curves:
            written.append(plots.plot_curves(agg.grid, curves, out / filename, xlabel=grid_name,
                                             ylabel=ylabel, title=spec.name, loglog=loglog))

    (out / "experiment.json").write_text(ujson.dumps(spec_to_dict(spec), indent=2, sort_keys=True))
    written.append(out / "experiment.json")
    return written


def summarize(agg: AggregateResult) -> list[str]:
    """Log-friendly lines: final-grid mean +- stderr per metric."""
    lines = []
    for name in agg.metrics:
        mean, se = agg.mean(name)[-1], agg.stderr(name)[-1]
        if math.isfinite(mean):
            lines.append(f"{name}: {format_metric(mean)} ± {format_metric(se)}")
    return lines
