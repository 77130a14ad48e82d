import argparse
import logging

from config import ConfigError
from handlers.presets import DEFAULT_PRESET, PRESETS, preset_document
from services.harness import ExperimentSpec, load_document, run_experiment, spec_from_dict, summarize
from services.lp_solver import SolverError

logger = logging.getLogger("sparse_bwk")


def apply_overrides(doc: dict, args: argparse.Namespace) -> ExperimentSpec:
    """--out / --seed / --reps / --threads take precedence over the document."""
    if getattr(args, "out", None):
        doc["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        doc["master_seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        doc["replications"] = args.reps
    if getattr(args, "threads", None) is not None:
        doc["threads"] = args.threads
    return spec_from_dict(doc)


def build_spec(args: argparse.Namespace, kind: str) -> ExperimentSpec:
    if args.config and args.preset:
        raise ConfigError("use either --config or --preset, not both")
    doc = load_document(args.config) if args.config else preset_document(args.preset or DEFAULT_PRESET[kind])
    if doc.get("kind") != kind:
        raise ConfigError(f"experiment kind is {doc.get('kind')!r}, this command runs {kind!r}")
    return apply_overrides(doc, args)


def run_spec(spec: ExperimentSpec) -> int:
    logger.info("Running %s (%s): %d replications, grid %s, %d threads",
                spec.name, spec.kind, spec.replications, list(spec.t_grid), spec.threads)
    try:
        agg = run_experiment(spec)
    except SolverError as e:
        logger.error("%s: solver error: %s", spec.name, e)
        return 1
    except RuntimeError as e:
        logger.error("%s: %s", spec.name, e)
        return 1
    for line in summarize(agg):
        logger.info("  %s", line)
    logger.info("%s: %d files written under %s", spec.name, len(agg.outputs), spec.output_dir)
    return 1 if agg.failures else 0


def _run_kind(kind: str, args: argparse.Namespace) -> int:
    try:
        spec = build_spec(args, kind)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return 1
    return run_spec(spec)


def cmd_estimate(args: argparse.Namespace) -> int:
    return _run_kind("estimation", args)


def cmd_bandit(args: argparse.Namespace) -> int:
    return _run_kind("bandit", args)


def cmd_bwk(args: argparse.Namespace) -> int:
    return _run_kind("bwk", args)


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run several experiments in turn; --config and --preset may both repeat.

    With neither given, every desk preset runs.
    """
    configs = list(args.config or [])
    presets = list(args.preset or [])
    if not configs and not presets:
        presets = [name for name in PRESETS if name.endswith("-desk")]

    status = 0
    jobs = [(path, load_document) for path in configs] + [(name, preset_document) for name in presets]
    for source, loader in jobs:
        try:
            spec = apply_overrides(loader(source), args)
        except ConfigError as e:
            logger.error("Configuration error in %s: %s", source, e)
            status = 1
            continue
        status = max(status, run_spec(spec))
    return status


def cmd_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        doc = PRESETS[name]
        inst = doc["instance"]
        print(f"{name:<12} {doc['kind']:<10} d={inst['d']} K={inst['K']} m={inst['m']} "
              f"s0={inst['s0']} grid={doc['t_grid'][0]}..{doc['t_grid'][-1]} "
              f"reps={doc['replications']}")
    return 0
