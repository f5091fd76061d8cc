"""Command line front end: ``spinrod simulate|converge|steady|sweep --config FILE [--key value ...]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .runner import (ConfigError, StepFailure, load_config, config_from_mapping, run_converge,
                     run_simulate, run_steady, summary_text, sweep, write_record)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NEWTON = 3
EXIT_NOT_STEADY = 4


def _overrides(extra):
    """Turn ``--key value`` / ``--key=value`` pairs into a mapping."""
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for {tok}")
            value = extra[i + 1]
            i += 2
        out[key] = value
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="spinrod", description=__doc__)
    ap.add_argument("command", choices=["simulate", "converge", "steady", "sweep"])
    ap.add_argument("--config", action="append", default=[],
                    help="key = value file; repeat for sweep")
    ap.add_argument("--mode", choices=["time", "space"], default="time", help="converge: refinement mode")
    ap.add_argument("--levels", type=int, default=4, help="converge: number of refinement levels")
    ap.add_argument("--threshold", type=float, default=None, help="steady: residual threshold")
    ap.add_argument("--workers", type=int, default=None, help="sweep: worker threads")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _configs(args, extra):
    over = _overrides(extra)
    if not args.config:
        return [config_from_mapping(over)]
    return [load_config(path, over) for path in args.config]


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        configs = _configs(args, extra)
        if args.command != "sweep" and len(configs) != 1:
            raise ConfigError(f"{args.command} takes exactly one --config")
    except ConfigError as exc:
        print(f"spinrod: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            rec = run_simulate(configs[0])
            print(summary_text(rec), end="")
        elif args.command == "steady":
            rec = run_steady(configs[0], args.threshold)
            print(summary_text(rec), end="")
            if not rec.reached_threshold:
                print("spinrod: steady threshold not reached before tEnd", file=sys.stderr)
                return EXIT_NOT_STEADY
        elif args.command == "converge":
            table = run_converge(configs[0], args.mode, args.levels)
            text = table.to_csv()
            if configs[0].outputPath:
                out = Path(configs[0].outputPath)
                out.mkdir(parents=True, exist_ok=True)
                (out / f"convergence_{args.mode}.csv").write_text(text)
            print(text, end="")
        else:
            records = sweep(configs, args.workers)
            for k, rec in enumerate(records):
                print(f"# run {k}")
                print(summary_text(rec), end="")
    except ConfigError as exc:
        print(f"spinrod: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailure as exc:
        trace = ", ".join(f"{x:.2e}" for x in exc.trace)
        print(f"spinrod: {exc}\n  residual trace: {trace}", file=sys.stderr)
        return EXIT_NEWTON
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
