import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler

import config
from handlers.commands import cmd_bandit, cmd_bwk, cmd_estimate, cmd_presets, cmd_sweep

# --- Logging ---
logger = logging.getLogger("sparse_bwk")


def setup_logging():
    logger.setLevel(getattr(logging, config.LOG_LEVEL.upper(), logging.INFO))
    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    file_handler = RotatingFileHandler(config.LOG_FILE, maxBytes=config.LOG_MAX_BYTES,
                                       backupCount=config.LOG_BACKUP_COUNT)
    file_handler.setFormatter(formatter)
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    logger.addHandler(file_handler)
    logger.addHandler(stream_handler)


def _add_run_options(parser: argparse.ArgumentParser, repeatable: bool = False):
    action = "append" if repeatable else "store"
    parser.add_argument("--config", action=action, help="experiment JSON file")
    parser.add_argument("--preset", action=action, help="named preset (see `presets`)")
    parser.add_argument("--out", help=f"output directory (default {config.OUTPUT_DIR})")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--reps", type=int, help="number of replications")
    parser.add_argument("--threads", type=int, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-bwk",
        description="Online hard thresholding for sparse bandits and bandits with knapsacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler, help_text in (
        ("estimate", cmd_estimate, "online sparse estimation study"),
        ("bandit", cmd_bandit, "high-dimensional bandit regret study"),
        ("bwk", cmd_bwk, "bandits-with-knapsacks regret study"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_run_options(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("sweep", help="run several experiments in turn")
    _add_run_options(p, repeatable=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("presets", help="list named presets")
    p.set_defaults(handler=cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    logger.info("=== START %s ===", args.command)
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 1
    finally:
        logger.info("=== STOP %s ===", args.command)


if __name__ == "__main__":
    sys.exit(main())
