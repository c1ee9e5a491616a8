"""Two-layer polynomial-regression search for 1-D separable subproblems.

Layer one samples the whole variable range, picks a quadratic or quintic
global model depending on the fitness distance correlation, and shrinks
the range around the model's maximiser.  Layer two real-evaluates the global
model's optimum, resamples the shrunken range, fits a quintic per subregion and real-evaluates only the single most
promising subregion optimum.

All samples are scored by fitness improvement against a fixed context
vector, ``e(x) = f(context) - f(context with x spliced in)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .budget import CountingEvaluator
from .surrogates import InsufficientSamplesError, fdc, fit_pr, maximize_poly

logger = logging.getLogger(__name__)

__all__ = ["ContextVector", "PrSearchConfig", "PrSearchResult", "shrink_region", "solve_1d"]

MIN_SUBREGION_SAMPLES = 6


@dataclass
class ContextVector:
    values: np.ndarray
    fitness: float


@dataclass(frozen=True)
class PrSearchConfig:
    d_s: int = 100
    epsilon: float = 0.8
    r2: float = 15.0
    r5: float = 10.0
    sampling: str = "grid"  # or "random"

    def __post_init__(self):
        if self.d_s < 12:
            raise ValueError("d_s must be at least 12 so that d_s // 6 >= 2")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.r2 <= 1.0 or self.r5 <= 1.0:
            raise ValueError("shrink divisors must exceed 1")
        if self.sampling not in ("grid", "random"):
            raise ValueError("sampling must be 'grid' or 'random'")


@dataclass
class PrSearchResult:
    x: float
    improvement: float
    evaluations: int
    truncated: bool = False
    trace: dict = field(default_factory=dict)


def shrink_region(lb: float, ub: float, center: float, r: float) -> tuple[float, float]:
    """New search range ``[lb / r + center, ub / r + center]`` clamped to ``[lb, ub]``."""
    new_lb = lb / r + center
    new_ub = ub / r + center
    if new_lb < lb:
        new_lb = lb
    if new_ub > ub:
        new_ub = ub
    return new_lb, new_ub


def _uniform(lb: float, ub: float, n: int, config: PrSearchConfig, rng: Optional[np.random.Generator]):
    if n <= 0:
        return np.empty(0)
    if config.sampling == "random":
        if rng is None:
            raise ValueError("random sampling needs an rng")
        return lb + rng.random(n) * (ub - lb)
    if n == 1:
        return np.array([0.5 * (lb + ub)])
    return np.linspace(lb, ub, n)


def _resolution(f_context: float) -> float:
    """Smallest improvement difference distinguishable from rounding noise."""
    return 8.0 * np.finfo(float).eps * max(abs(f_context), 1.0)


def _borrow(counts_members: list[np.ndarray], i: int) -> np.ndarray:
    """Members of subregion ``i`` widened one neighbour at a time (left, then right)."""
    n = len(counts_members)
    chosen = [counts_members[i]]
    total = counts_members[i].size
    step = 1
    while total < MIN_SUBREGION_SAMPLES and (i - step >= 0 or i + step < n):
        for j in (i - step, i + step):
            if 0 <= j < n:
                chosen.append(counts_members[j])
                total += counts_members[j].size
                if total >= MIN_SUBREGION_SAMPLES:
                    break
        step += 1
    return np.concatenate(chosen)


def solve_1d(
    evaluator: CountingEvaluator,
    context: ContextVector,
    var_index: int,
    config: PrSearchConfig = PrSearchConfig(),
    rng: Optional[np.random.Generator] = None,
    phase: str = "pr_search",
) -> PrSearchResult:
    """Optimise variable ``var_index`` with everything else fixed at ``context``.

    Costs ``d_s`` FEs for layer one, ``d_s - |reused|`` for layer two and one
    for the chosen subregion optimum.  When the remaining budget cannot pay
    for a layer, the search stops and returns the best real sample so far
    with ``truncated=True`` (or the context's own value when nothing was
    evaluated).
    """
    problem = evaluator.problem
    budget = evaluator.budget
    lb = float(problem.lower[var_index])
    ub = float(problem.upper[var_index])
    base = np.asarray(context.values, dtype=float)
    f_context = float(context.fitness)
    trace: dict = {"var": int(var_index)}

    def improvements(xs: np.ndarray) -> np.ndarray:
        X = np.repeat(base[None, :], xs.size, axis=0)
        X[:, var_index] = xs
        return f_context - evaluator.evaluate_batch(X, phase)

    d_s = config.d_s
    if not budget.can_afford(d_s + 1):
        trace["truncated_at"] = "layer1"
        return PrSearchResult(float(base[var_index]), 0.0, 0, True, trace)

    used = 0
    # layer one
    xs1 = _uniform(lb, ub, d_s, config, rng)
    e1 = improvements(xs1)
    used += d_s
    k = int(np.argmax(e1))
    best_x, best_e = float(xs1[k]), float(e1[k])

    fdc_value = fdc(xs1, -e1)
    if abs(fdc_value) > config.epsilon:
        degree, r = 2, config.r2
    else:
        degree, r = 5, config.r5
    model = fit_pr(xs1, e1, degree, domain=(lb, ub))
    x_s = maximize_poly(model, lb, ub)
    lb2, ub2 = shrink_region(lb, ub, x_s, r)
    trace.update(fdc=fdc_value, degree=degree, x_model=x_s, region=[lb2, ub2])
    if not lb2 <= x_s <= ub2:
        logger.info("var %d: model optimum %.6g lies outside shrunken range [%.6g, %.6g]", var_index, x_s, lb2, ub2)

    if not lb2 < ub2:
        # degenerate range: spend one FE on the global model's optimum instead
        e_s = improvements(np.array([x_s]))[0]
        used += 1
        if e_s > best_e:
            best_x, best_e = x_s, float(e_s)
        trace.update(winner=x_s, degenerate_region=True, fes=used)
        return PrSearchResult(best_x, best_e, used, False, trace)

    # layer two
    reuse = (xs1 >= lb2) & (xs1 <= ub2)
    n_new = d_s - int(reuse.sum())
    if not budget.can_afford(n_new + 1):
        trace.update(truncated_at="layer2", fes=used)
        return PrSearchResult(best_x, best_e, used, True, trace)
    # the global model's optimum is the layer-one incumbent, so it is one of
    # the paid layer-two samples whenever it lies inside the new range
    if n_new and lb2 <= x_s <= ub2:
        xs_new = np.concatenate([[x_s], _uniform(lb2, ub2, n_new - 1, config, rng)])
    else:
        xs_new = _uniform(lb2, ub2, n_new, config, rng)
    e_new = improvements(xs_new) if n_new else np.empty(0)
    used += n_new
    incumbent = None
    if e_new.size and e_new.max() > best_e:
        k = int(np.argmax(e_new))
        best_x, best_e = float(xs_new[k]), float(e_new[k])

    if n_new and xs_new[0] == x_s:
        incumbent = (float(x_s), float(e_new[0]))
    xs2 = np.concatenate([xs1[reuse], xs_new])
    e2 = np.concatenate([e1[reuse], e_new])
    n_sub = d_s // 6
    width = (ub2 - lb2) / n_sub
    cell = np.clip(np.floor((xs2 - lb2) / width).astype(int), 0, n_sub - 1)
    members = [np.flatnonzero(cell == i) for i in range(n_sub)]

    best_pred, winner = -np.inf, None
    for i in range(n_sub):
        lo_i = lb2 + i * width
        hi_i = ub2 if i == n_sub - 1 else lb2 + (i + 1) * width
        idx = _borrow(members, i)
        try:
            local = fit_pr(xs2[idx], e2[idx], 5, domain=(lo_i, hi_i))
        except InsufficientSamplesError:
            continue
        x_i = maximize_poly(local, lo_i, hi_i)
        pred = float(local.predict(x_i))
        if pred > best_pred:
            best_pred, winner = pred, x_i

    if winner is None:
        winner = float(np.clip(x_s, lb2, ub2))
    e_w = improvements(np.array([winner]))[0]
    used += 1
    if e_w > best_e:
        best_x, best_e = float(winner), float(e_w)
    trace.update(winner=winner, winner_improvement=float(e_w))
    if incumbent is not None and best_e <= incumbent[1] + _resolution(f_context):
        # differences below the evaluation's rounding noise cannot overturn the model optimum
        best_x, best_e = incumbent
    trace["fes"] = used
    return PrSearchResult(best_x, best_e, used, False, trace)
