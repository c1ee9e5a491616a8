"""Real-evaluation accounting.

Every call into a :class:`~ccopt.benchmarks.Problem` made by an optimizer goes
through a :class:`CountingEvaluator`, which charges an :class:`EvalBudget`
before touching the problem and records each returned fitness so the run
trace can be rebuilt afterwards.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .benchmarks import Problem

DEFAULT_MAX_FES = 300_000


class BudgetExhausted(RuntimeError):
    """Raised when a charge would push ``used`` past ``max_fes``."""


class EvalBudget:
    """Monotone counter of real function evaluations with a per-phase log."""

    def __init__(self, max_fes: int = DEFAULT_MAX_FES):
        if max_fes < 0:
            raise ValueError("max_fes must be non-negative")
        self.max_fes = int(max_fes)
        self.used = 0
        self.charges: "OrderedDict[str, int]" = OrderedDict()

    @property
    def remaining(self) -> int:
        return self.max_fes - self.used

    def can_afford(self, n: int) -> bool:
        return n <= self.remaining

    def charge(self, n: int, phase: str = "other") -> None:
        n = int(n)
        if n < 0:
            raise ValueError("cannot charge a negative number of evaluations")
        if n > self.remaining:
            raise BudgetExhausted(f"need {n} FEs in phase {phase!r}, only {self.remaining} left")
        self.used += n
        self.charges[phase] = self.charges.get(phase, 0) + n

    def charge_log(self) -> dict:
        return dict(self.charges)

    def __repr__(self) -> str:
        return f"EvalBudget(used={self.used}, max_fes={self.max_fes})"


class CountingEvaluator:
    """Budgeted, recording front end to a problem.

    ``evaluate(X, phase)`` accepts one point or a batch and returns fitness
    values; each row costs one FE.  Fitness values are appended to an
    internal log in evaluation order, so ``fitness_log()[k]`` is the value
    of the (k+1)-th real evaluation charged through this object.  Charges
    made directly on the budget (e.g. an external decomposer) appear as NaN.
    """

    def __init__(self, problem: Problem, budget: EvalBudget, record: bool = True):
        self.problem = problem
        self.budget = budget
        self.record = record
        self._chunks: list[np.ndarray] = []
        self._logged = 0

    def _pad_external(self) -> None:
        gap = self.budget.used - self._logged
        if gap > 0 and self.record:
            self._chunks.append(np.full(gap, np.nan))
            self._logged += gap

    def evaluate_batch(self, X: np.ndarray, phase: str) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._pad_external()
        self.budget.charge(X.shape[0], phase)
        values = self.problem.evaluate_batch(X)
        if self.record:
            self._chunks.append(values.copy())
        self._logged += X.shape[0]
        return values

    def evaluate(self, x: np.ndarray, phase: str) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :], phase)[0])

    def fitness_log(self) -> np.ndarray:
        self._pad_external()
        if not self._chunks:
            return np.empty(0)
        if len(self._chunks) > 1:
            self._chunks = [np.concatenate(self._chunks)]
        return self._chunks[0]


def best_so_far(fitness_log: np.ndarray) -> np.ndarray:
    """Running minimum that ignores NaN placeholders (NaN until the first value)."""
    filled = np.where(np.isnan(fitness_log), np.inf, fitness_log)
    out = np.minimum.accumulate(filled) if filled.size else filled
    return np.where(np.isinf(out), np.nan, out)


def downsample_trace(fitness_log: np.ndarray, max_points: int = 10_000) -> list[tuple[int, float]]:
    """(fe_count, best_so_far) pairs at uniform FE checkpoints, at most ``max_points``.

    The value at each checkpoint is the best-so-far after that many FEs
    (last value carried forward).  Checkpoints before the first recorded
    fitness are dropped.
    """
    bsf = best_so_far(fitness_log)
    n = bsf.size
    if n == 0:
        return []
    if n <= max_points:
        checkpoints = np.arange(1, n + 1)
    else:
        checkpoints = np.unique(np.ceil(np.linspace(n / max_points, n, max_points)).astype(int))
    return [(int(k), float(bsf[k - 1])) for k in checkpoints if not np.isnan(bsf[k - 1])]
