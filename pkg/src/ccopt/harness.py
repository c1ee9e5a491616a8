"""Experiment batteries: functions x variants x seeds, plus result statistics.

Each cell writes ``traces/<function>_<variant>_<seed>.json`` (the run's
:class:`~ccopt.cc_core.RunResult` JSON).  Aggregation reads only those
summaries, so ``report`` can rebuild ``results.csv`` from a finished
output directory.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.stats import rankdata

from .benchmarks import BENCHMARK_IDS, build_benchmark
from .cc_core import VARIANTS, AlgorithmConfig, normalize_variant, run_variant
from .decomposition import decompose

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "aggregate",
    "cohens_d",
    "friedman_ranks",
    "mark",
    "report",
    "run_cell",
    "run_experiment",
]

TIE_THRESHOLD = 0.2
RANK_ROW = "*"


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


def cohens_d(a, b) -> float:
    """Standardised mean difference ``(mean_a - mean_b) / pooled_sd``.

    Pooled variance uses n - 1 denominators.  With zero pooled spread the
    result is 0 for equal means and a signed infinity otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("cohens_d needs at least two values per sample")
    diff = a.mean() - b.mean()
    pooled = math.sqrt(((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2))
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return float(diff / pooled)


def mark(d: float, threshold: float = TIE_THRESHOLD) -> str:
    """'+' when the variant beats the reference (lower fitness), '-' when worse."""
    if abs(d) < threshold:
        return "≈"
    return "+" if d < 0 else "-"


def friedman_ranks(table: dict, variants: Optional[list] = None) -> dict:
    """Mean rank per variant over functions (1 = lowest fitness, ties averaged).

    ``table`` maps function -> {variant: score}.  Functions missing any of
    the variants are left out with a warning.
    """
    if variants is None:
        variants = sorted({v for row in table.values() for v in row})
    if len(variants) < 2:
        raise ValueError("Friedman ranking needs at least two variants")
    totals = dict.fromkeys(variants, 0.0)
    used = 0
    for fn, row in table.items():
        missing = [v for v in variants if v not in row or row[v] is None or not np.isfinite(row[v])]
        if missing:
            warnings.warn(f"{fn}: no score for {missing}; excluded from the ranking")
            continue
        ranks = rankdata([row[v] for v in variants], method="average")
        for v, r in zip(variants, ranks):
            totals[v] += float(r)
        used += 1
    if used == 0:
        raise ValueError("no function has scores for every variant")
    return {v: totals[v] / used for v in variants}


# ---------------------------------------------------------------------------
# result table
# ---------------------------------------------------------------------------


@dataclass
class ResultRow:
    function: str
    variant: str
    n: int
    mean: float
    std: float
    d: Optional[float] = None
    mark: str = ""
    rank: Optional[float] = None


_FIELDS = ["function", "variant", "n", "mean", "std", "d", "mark", "rank"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_float(s: str) -> Optional[float]:
    return None if s == "" else float(s)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    mean_ranks: dict = field(default_factory=dict)
    reference: str = "ASMCC"

    def row(self, function: str, variant: str) -> ResultRow:
        for r in self.rows:
            if r.function == function and r.variant == variant:
                return r
        raise KeyError((function, variant))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_FIELDS)
            for r in self.rows:
                w.writerow([_fmt(getattr(r, f)) for f in _FIELDS])
            for v, rank in self.mean_ranks.items():
                w.writerow([RANK_ROW, v, "", "", "", "", "", _fmt(rank)])

    @classmethod
    def from_csv(cls, path, reference: str = "ASMCC") -> "ResultTable":
        table = cls(reference=reference)
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                if rec["function"] == RANK_ROW:
                    table.mean_ranks[rec["variant"]] = float(rec["rank"])
                    continue
                table.rows.append(
                    ResultRow(
                        function=rec["function"],
                        variant=rec["variant"],
                        n=int(rec["n"]),
                        mean=float(rec["mean"]),
                        std=float(rec["std"]),
                        d=_parse_float(rec["d"]),
                        mark=rec["mark"],
                        rank=_parse_float(rec["rank"]),
                    )
                )
        return table


def aggregate(cells: Iterable[dict], reference: str = "ASMCC") -> ResultTable:
    """Mean/std per (function, variant), Cohen's d and marks against ``reference``."""
    finals: dict = {}
    for c in cells:
        if c.get("error"):
            continue
        finals.setdefault(c["function"], {}).setdefault(c["variant"], []).append(float(c["final"]))
    table = ResultTable(reference=reference)
    means: dict = {}
    for fn in sorted(finals, key=_function_key):
        per_variant = finals[fn]
        ref = per_variant.get(reference)
        for variant in sorted(per_variant, key=_variant_key):
            vals = np.asarray(per_variant[variant])
            row = ResultRow(
                function=fn,
                variant=variant,
                n=int(vals.size),
                mean=float(vals.mean()),
                std=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            )
            if variant != reference and ref is not None and len(ref) >= 2 and vals.size >= 2:
                row.d = cohens_d(vals, ref)
                row.mark = mark(row.d)
            table.rows.append(row)
            means.setdefault(fn, {})[variant] = row.mean
        ranks = rankdata([means[fn][v] for v in sorted(per_variant, key=_variant_key)], method="average")
        for variant, r in zip(sorted(per_variant, key=_variant_key), ranks):
            table.row(fn, variant).rank = float(r)
    variants = sorted({v for m in means.values() for v in m}, key=_variant_key)
    if len(variants) >= 2:
        try:
            table.mean_ranks = friedman_ranks(means, variants)
        except ValueError as exc:
            warnings.warn(f"no Friedman ranking: {exc}")
    return table


def _function_key(fn: str):
    return (0, int(fn[1:])) if fn[:1] == "F" and fn[1:].isdigit() else (1, fn)


def _variant_key(v: str):
    return (VARIANTS.index(v), v) if v in VARIANTS else (len(VARIANTS), v)


# ---------------------------------------------------------------------------
# experiment execution
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    functions: list = field(default_factory=lambda: list(BENCHMARK_IDS))
    variants: list = field(default_factory=lambda: list(VARIANTS))
    runs: int = 25
    budget: int = 300_000
    dimension: int = 1000
    group_size: int = 50
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    base_seed: int = 0
    benchmark_seed: int = 0
    decomposer: str = "ideal"
    decomposer_budget: int = 0
    reference: str = "ASMCC"
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        self.variants = [normalize_variant(v) for v in self.variants]
        self.functions = [str(f).upper() for f in self.functions]
        self.reference = normalize_variant(self.reference)

    def seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.runs)]

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["algorithm"] = self.algorithm.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        algo = dict(doc.pop("algorithm", {}) or {})
        for key in list(doc):
            if key in AlgorithmConfig.__dataclass_fields__:
                algo[key] = doc.pop(key)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(algorithm=AlgorithmConfig.from_json(algo), **doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def trace_name(function: str, variant: str, seed: int) -> str:
    return f"{function}_{variant}_{seed}.json"


def run_cell(
    function: str,
    variant: str,
    seed: int,
    *,
    budget: int = 300_000,
    dimension: int = 1000,
    group_size: int = 50,
    benchmark_seed: int = 0,
    algorithm: Optional[dict] = None,
    decomposer: str = "ideal",
    decomposer_budget: int = 0,
    trace_dir: Optional[str] = None,
) -> dict:
    """Run one (function, variant, seed) cell; never raises."""
    start = time.perf_counter()
    try:
        problem = build_benchmark(function, dimension, group_size, benchmark_seed)
        decomp = decompose(decomposer, problem, decomposer_budget)
        config = AlgorithmConfig.from_json(algorithm or {})
        result = run_variant(variant, problem, decomp, config, seed, budget)
        if trace_dir is not None:
            path = Path(trace_dir) / trace_name(function, result.variant, seed)
            path.write_text(result.dumps())
        return {
            "function": function,
            "variant": result.variant,
            "seed": seed,
            "final": result.best_fitness,
            "f_star": result.f_star,
            "fes_used": result.fes_used,
            "seconds": time.perf_counter() - start,
        }
    except Exception as exc:  # recorded and excluded, never silent
        logger.exception("cell %s/%s/%s failed", function, variant, seed)
        return {"function": function, "variant": variant, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def _cell_kwargs(config: ExperimentConfig, trace_dir: str) -> dict:
    return {
        "budget": config.budget,
        "dimension": config.dimension,
        "group_size": config.group_size,
        "benchmark_seed": config.benchmark_seed,
        "algorithm": config.algorithm.to_json(),
        "decomposer": config.decomposer,
        "decomposer_budget": config.decomposer_budget,
        "trace_dir": trace_dir,
    }


def _worker_count(config: ExperimentConfig) -> int:
    env = os.environ.get("CCOPT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(config.workers))


def _call(args):
    fn, variant, seed, kwargs = args
    return run_cell(fn, variant, seed, **kwargs)


@dataclass
class ExperimentOutcome:
    table: ResultTable
    cells: list
    failures: list


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Run every cell, write traces and ``results.csv`` under ``output_dir``."""
    out = Path(config.output_dir)
    trace_dir = out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_json(), indent=2, sort_keys=True))
    kwargs = _cell_kwargs(config, str(trace_dir))
    jobs = [(fn, v, s, kwargs) for fn in config.functions for v in config.variants for s in config.seeds()]
    workers = _worker_count(config)
    if workers == 1:
        cells = [_call(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_call, jobs))
    failures = [c for c in cells if c.get("error")]
    for c in failures:
        warnings.warn(f"cell {c['function']}/{c['variant']}/{c['seed']} failed: {c['error']}")
    table = aggregate(cells, config.reference)
    table.to_csv(out / "results.csv")
    return ExperimentOutcome(table, cells, failures)


def report(directory, reference: str = "ASMCC") -> ResultTable:
    """Re-aggregate the traces in ``directory/traces`` into ``results.csv``."""
    out = Path(directory)
    cells = []
    for path in sorted((out / "traces").glob("*.json")):
        doc = json.loads(path.read_text())
        cells.append(
            {
                "function": doc["problem"].get("id", doc["problem"].get("name")),
                "variant": doc["variant"],
                "seed": doc["seed"],
                "final": doc["best_fitness"],
            }
        )
    table = aggregate(cells, normalize_variant(reference))
    table.to_csv(out / "results.csv")
    return table
