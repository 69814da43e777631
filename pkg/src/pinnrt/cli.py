"""Command-line front end: run a case, emit its oracle, or check thresholds."""

import argparse
import dataclasses
import sys
import time

from .cases import StageError, acceptance_checks, oracle_case, run_case
from .config import CASES, ConfigError, default_config, parse_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinnrt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train a case and write fields, history, metrics")
    oracle = sub.add_parser("oracle", help="write the reference solution for a case")
    check = sub.add_parser("check", help="run a case and assert its acceptance thresholds")
    for p in (run, oracle, check):
        p.add_argument("case", choices=CASES)
        p.add_argument("--config", help="JSON config file (defaults per case otherwise)")
    for p in (run, check):
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="seed override")
    oracle.add_argument("--out", required=True, help="output directory")
    return parser


def _load_config(args):
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        if cfg.case != args.case:
            raise ConfigError(f"config file is for case {cfg.case!r}, not {args.case!r}")
    else:
        cfg = default_config(args.case)
    if getattr(args, "out", None):
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "oracle":
            artifacts = oracle_case(args.case, cfg, args.out)
            for name in sorted(artifacts):
                print(f"artifact {name}: {artifacts[name]}")
            return 0

        t0 = time.perf_counter()
        report = run_case(args.case, cfg)
        elapsed = time.perf_counter() - t0
        for key in sorted(report.metrics):
            print(f"{key} = {report.metrics[key]:.17g}")
        for name in sorted(report.artifacts):
            print(f"artifact {name}: {report.artifacts[name]}")
        print(f"elapsed: {elapsed:.1f} s", file=sys.stderr)

        if args.command == "check":
            checks = acceptance_checks(args.case, report.metrics)
            for label, ok, detail in checks:
                print(f"{'PASS' if ok else 'FAIL'}  {label}  ({detail})")
            return 0 if all(ok for _, ok, _ in checks) else 1
        return 0
    except (ConfigError, StageError, ValueError, ArithmeticError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
