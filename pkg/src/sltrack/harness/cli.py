"""Command line entry point.

    sltrack run --config scenario.cfg [--runs N] [--seed S] --out DIR [--svg] [--workers K]
    sltrack preset paper_scenario --out DIR [--runs N] [--svg] [--workers K]

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .config import PRESET_NOTES, PRESETS, ConfigError, ScenarioConfig, dump_config, get_preset, parse_config
from .export import write_csv, write_svg
from .runner import run_monte_carlo

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

log = logging.getLogger("sltrack")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sltrack", description="Tracker self-assessment Monte-Carlo harness.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", required=True, type=Path, help="output directory (created if missing)")
        sp.add_argument("--runs", type=int, help="number of Monte-Carlo runs (default: from config)")
        sp.add_argument("--seed", type=int, help="master seed (default: from config)")
        sp.add_argument("--svg", action="store_true", help="also write scores_<sensor>.svg")
        sp.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("--config", required=True, type=Path)
    common(run)
    pre = sub.add_parser("preset", help="run a bundled scenario")
    pre.add_argument("name", choices=sorted(PRESETS))
    common(pre)
    return p


def _load(args) -> tuple[ScenarioConfig, tuple[str, ...]]:
    if args.command == "preset":
        cfg, notes = get_preset(args.name), PRESET_NOTES.get(args.name, ())
    else:
        cfg, notes = parse_config(args.config), ()
    changes = {}
    if args.runs is not None:
        changes["mc_runs"] = args.runs
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        try:
            cfg = cfg.replace(**changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg, notes


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, notes = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "config_resolved.txt").write_text(dump_config(cfg, notes))
    except OSError as exc:
        print(f"cannot write to {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO

    t0 = time.perf_counter()
    result = run_monte_carlo(cfg, workers=args.workers)
    log.info("%d runs in %.1f s", result.num_runs, time.perf_counter() - t0)
    for w in result.mean.warnings:
        log.warning(w)

    try:
        write_csv(result.mean, args.out / "scores.csv")
        if args.svg:
            for sid in range(1, cfg.num_sensors + 1):
                write_svg(result.mean, args.out / f"scores_{sid}.svg", sid, cfg.disturbances)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out / 'scores.csv'} ({result.num_runs} runs)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
