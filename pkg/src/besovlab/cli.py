"""Command-line entry point: ``besovlab run | list | check``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError
from .report import emit
from .suites import REGISTRY, ExperimentConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besovlab", description="Spectral Besov-space verification battery.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="run the suites selected by a JSON config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", help="output directory (overrides the config's 'out')")
    run.add_argument("--jobs", type=int, default=1, help="suites evaluated concurrently")
    sub.add_parser("list", help="list the suite registry")
    chk = sub.add_parser("check", help="run a single suite with default settings")
    chk.add_argument("--suite", required=True)
    chk.add_argument("--n", type=int, default=255, help="interior points of the unit interval")
    chk.add_argument("--alpha", type=float, default=None, help="fractional order")
    chk.add_argument("--out", help="optional output directory")
    return ap


def _summarize(report, stream) -> None:
    for row in report.rows:
        mark = "PASS" if row.passed else "FAIL"
        extra = f"  [{row.note}]" if row.note else ""
        print(f"{mark}  {row.suite:<40s} {row.value:.6g}  {row.param_json}{extra}", file=stream)
    n_fail = len(report.failures())
    print(f"{len(report.rows) - n_fail}/{len(report.rows)} rows passed", file=stream)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "list":
        for info in REGISTRY.values():
            print(f"{info.name:<16s} {info.summary}")
        return EXIT_OK
    try:
        if args.cmd == "run":
            cfg = ExperimentConfig.load(args.config)
            out = args.out or cfg.out
            if out is None:
                raise ConfigError("no output directory: pass --out or set 'out' in the config")
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            jobs = args.jobs
        else:
            if args.suite not in REGISTRY:
                raise ConfigError(f"unknown suite {args.suite!r}; see 'besovlab list'")
            doc = {"n": args.n, "suites": [args.suite]}
            if args.alpha is not None:
                doc["alphas"] = [args.alpha]
                doc["suites"] = {args.suite: {"alphas": [args.alpha], "alpha": args.alpha}}
            cfg = ExperimentConfig.from_dict(doc)
            out, jobs = args.out, 1
        cfg.with_env_seed()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_suite(cfg, jobs=jobs)
    if out is not None:
        try:
            emit(report, Path(out))
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return EXIT_FAIL
    _summarize(report, sys.stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
