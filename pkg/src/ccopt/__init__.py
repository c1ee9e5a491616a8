"""Cooperative coevolution with adaptively constructed surrogate models."""

from .benchmarks import BENCHMARK_IDS, BenchmarkSpec, OutOfBoundsError, Problem, build_benchmark, evaluate
from .budget import BudgetExhausted, CountingEvaluator, EvalBudget
from .cc_core import VARIANTS, AlgorithmConfig, RunResult, run_asmcc, run_variant
from .decomposition import Decomposition, decompose, ideal_decompose, register_decomposer

__version__ = "0.1.0"

__all__ = [
    "AlgorithmConfig",
    "BENCHMARK_IDS",
    "BenchmarkSpec",
    "BudgetExhausted",
    "CountingEvaluator",
    "Decomposition",
    "EvalBudget",
    "OutOfBoundsError",
    "Problem",
    "RunResult",
    "VARIANTS",
    "build_benchmark",
    "decompose",
    "evaluate",
    "ideal_decompose",
    "register_decomposer",
    "run_asmcc",
    "run_variant",
]
