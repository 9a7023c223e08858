"""Command line entry point: ``nads <analysis> --config <path> [--out <dir>] [--seed <u64>]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ANALYSES, load_config
from .errors import ConfigError
from .pipelines import EXIT_ERROR, run

log = logging.getLogger("nads")


def _parser():
    p = argparse.ArgumentParser(prog="nads", description="Analyses of non-autonomous discrete dynamical systems.")
    p.add_argument("analysis", choices=ANALYSES)
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--out", help="output directory (overrides output.dir in the config)")
    p.add_argument("--seed", type=int, help="rng seed (overrides rng_seed in the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _out_dir(args, config):
    if args.out:
        return Path(args.out)
    configured = config.output.get("dir")
    if configured:
        path = Path(configured)
        return path if path.is_absolute() else Path(config.base_dir or ".") / path
    return Path("nads-out")


def write_outputs(out_dir, result, report_name="report.json"):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / report_name).write_text(result.report_text())
    for name, text in result.artifacts.items():
        (out_dir / name).write_text(text)
    return out_dir / report_name


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_ERROR
    try:
        config = load_config(args.config, args.analysis, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    result = run(config)
    path = write_outputs(_out_dir(args, config), result, config.output.get("report", "report.json"))
    report = result.report
    if report.get("error"):
        print(f"error: {report['error']}", file=sys.stderr)
    print(f"{config.analysis}: {report['verdict']} (exit {result.exit_code}); report at {path}")
    log.info("finished in %.3fs", report["timing"]["seconds"])
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
