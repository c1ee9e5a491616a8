"""Command-line front end.

    ccopt run --config battery.json [--output DIR] [--workers N]
    ccopt run-one --function F7 --variant asmcc --seed 3 --budget 300000
    ccopt report --dir DIR
    ccopt bench-info --function F9
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .benchmarks import BENCHMARK_IDS, build_benchmark, describe
from .budget import DEFAULT_MAX_FES
from .cc_core import VARIANTS, normalize_variant
from .harness import ExperimentConfig, report, run_cell, run_experiment


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dimension", type=int, default=1000)
    p.add_argument("--group-size", type=int, default=50)
    p.add_argument("--benchmark-seed", type=int, default=0, help="seed of the shift/rotation data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccopt", description="Cooperative-coevolution optimiser and benchmark runner")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full experiment battery from a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--output", type=Path, default=None, help="override the config's output directory")
    run.add_argument("--workers", type=int, default=None, help="worker processes (CCOPT_THREADS wins)")

    one = sub.add_parser("run-one", help="run a single (function, variant, seed) cell")
    one.add_argument("--function", required=True, choices=BENCHMARK_IDS, type=str.upper)
    one.add_argument("--variant", required=True, help=f"one of {', '.join(VARIANTS)} (case-insensitive)")
    one.add_argument("--seed", type=int, default=0)
    one.add_argument("--budget", type=int, default=DEFAULT_MAX_FES)
    one.add_argument("--trace-dir", type=Path, default=None, help="also write the trace JSON here")
    _add_problem_args(one)

    rep = sub.add_parser("report", help="re-aggregate traces in DIR/traces into DIR/results.csv")
    rep.add_argument("--dir", required=True, type=Path)
    rep.add_argument("--reference", default="ASMCC")

    info = sub.add_parser("bench-info", help="print the structure of a benchmark function")
    info.add_argument("--function", required=True, choices=BENCHMARK_IDS, type=str.upper)
    _add_problem_args(info)
    return parser


def _print_table(table) -> None:
    print(f"{'function':<8} {'variant':<9} {'mean':>13} {'std':>11} {'d':>9} mark rank")
    for r in table.rows:
        d = "" if r.d is None else f"{r.d:9.3g}"
        print(f"{r.function:<8} {r.variant:<9} {r.mean:13.4e} {r.std:11.3e} {d:>9} {r.mark:^4} {r.rank:g}")
    if table.mean_ranks:
        print("mean ranks: " + ", ".join(f"{v}={k:.4g}" for v, k in table.mean_ranks.items()))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "run":
        config = ExperimentConfig.load(args.config)
        if args.output is not None:
            config = replace(config, output_dir=str(args.output))
        if args.workers is not None:
            config = replace(config, workers=args.workers)
        outcome = run_experiment(config)
        _print_table(outcome.table)
        for c in outcome.failures:
            print(f"FAILED {c['function']}/{c['variant']}/{c['seed']}: {c['error']}", file=sys.stderr)
        return 1 if outcome.failures else 0

    if args.command == "run-one":
        try:
            variant = normalize_variant(args.variant)
        except ValueError as exc:
            print(exc, file=sys.stderr)
            return 2
        if args.trace_dir is not None:
            args.trace_dir.mkdir(parents=True, exist_ok=True)
        cell = run_cell(
            args.function,
            variant,
            args.seed,
            budget=args.budget,
            dimension=args.dimension,
            group_size=args.group_size,
            benchmark_seed=args.benchmark_seed,
            trace_dir=None if args.trace_dir is None else str(args.trace_dir),
        )
        print(json.dumps(cell, sort_keys=True))
        return 1 if cell.get("error") else 0

    if args.command == "report":
        if not (args.dir / "traces").is_dir():
            print(f"no traces directory under {args.dir}", file=sys.stderr)
            return 2
        _print_table(report(args.dir, args.reference))
        return 0

    if args.command == "bench-info":
        problem = build_benchmark(args.function, args.dimension, args.group_size, args.benchmark_seed)
        print(json.dumps(describe(problem), indent=2))
        return 0
    return 2  # pragma: no cover - argparse enforces the choices


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
