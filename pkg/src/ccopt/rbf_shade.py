"""RBF-prescreened SHADE on one nonseparable subproblem.

A subproblem keeps two stores of real-evaluated sub-solutions, both scored
as fitness improvement against the current best overall solution ``x*``:

* the SHADE population ``P_g``: the ``p`` best seen since the last rebase;
* ``recent_db``: the ``db_factor * D_g`` most recently evaluated points,
  which train the RBF.

Each generation produces ``p`` trials, ranks them with the RBF and pays for
exactly ``q`` real evaluations.  Whenever the best population member has a
positive improvement, it is spliced into ``x*`` and every stored improvement
is shifted by that amount so all values refer to the new ``x*``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc, rankdata

from .benchmarks import Problem
from .budget import BudgetExhausted, CountingEvaluator
from .shade import ShadeState, generate_trials, init_state, update_history
from .surrogates import RBFFitError, SampleSet, fit_rbf

logger = logging.getLogger(__name__)

__all__ = [
    "BestSolution",
    "GenerationRecord",
    "RbfShadeConfig",
    "SubproblemState",
    "evolve_one_generation",
    "init_subproblem",
    "select_top",
]


@dataclass(frozen=True)
class RbfShadeConfig:
    pop_size: int = 100
    q: int = 10
    db_factor: int = 5
    memory_size: Optional[int] = None
    pbest_rate: float = 0.1

    def __post_init__(self):
        if self.pop_size < 4:
            raise ValueError("pop_size must be at least 4")
        if not 1 <= self.q <= self.pop_size:
            raise ValueError("q must lie in [1, pop_size]")
        if self.db_factor < 1:
            raise ValueError("db_factor must be positive")


@dataclass
class BestSolution:
    """The best overall solution and its cached real fitness."""

    x: np.ndarray
    f: float

    def splice(self, group: np.ndarray, sub: np.ndarray) -> np.ndarray:
        X = np.repeat(self.x[None, :], np.atleast_2d(sub).shape[0], axis=0)
        X[:, group] = sub
        return X


@dataclass
class SubproblemState:
    group: np.ndarray
    shade: ShadeState
    recent_db: SampleSet
    pop_ages: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    capacity: int
    next_age: int = 0
    generation: int = 0
    fallbacks: int = 0

    @property
    def population(self) -> np.ndarray:
        return self.shade.population

    @property
    def improvements(self) -> np.ndarray:
        return self.shade.fitness


@dataclass
class GenerationRecord:
    generation: int
    real_values: list
    rank_correlation: Optional[float]
    f_star: float
    improved: bool
    fallback: bool = False
    rebase_amount: float = 0.0
    debug_max_error: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "generation": self.generation,
            "real_values": self.real_values,
            "rank_correlation": self.rank_correlation,
            "f_star": self.f_star,
            "improved": self.improved,
            "fallback": self.fallback,
        }


def _improvements(evaluator: CountingEvaluator, best: BestSolution, group, subs, phase: str) -> np.ndarray:
    return best.f - evaluator.evaluate_batch(best.splice(group, subs), phase)


def select_top(scores, q: int) -> np.ndarray:
    """Indices of the ``q`` largest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    return np.argsort(-scores, kind="stable")[:q]


def init_subproblem(
    evaluator: CountingEvaluator,
    group,
    best: BestSolution,
    config: RbfShadeConfig,
    rng: np.random.Generator,
    phase: str = "init",
) -> SubproblemState:
    """Latin-hypercube database of ``db_factor * D_g`` real samples; P_g = top ``p``.

    When the database is smaller than ``p``, extra uniform random points are
    evaluated so the population is full; they join P_g only.
    Raises :class:`BudgetExhausted` (charging nothing) when the budget cannot
    pay for the whole initialisation.
    """
    group = np.asarray(group, dtype=int)
    d = group.size
    problem = evaluator.problem
    lower, upper = problem.lower[group], problem.upper[group]
    n_db = config.db_factor * d
    n_pad = max(0, config.pop_size - n_db)
    if not evaluator.budget.can_afford(n_db + n_pad):
        raise BudgetExhausted(f"initialising a {d}-D subproblem needs {n_db + n_pad} FEs")

    unit = qmc.LatinHypercube(d=d, rng=rng).random(n_db)
    pts = qmc.scale(unit, lower, upper) if d > 0 else unit
    pts = np.clip(pts, lower, upper)
    e = _improvements(evaluator, best, group, pts, phase)
    db = SampleSet(pts, e)

    pool_x, pool_e = pts, e
    if n_pad:
        pad = lower + rng.random((n_pad, d)) * (upper - lower)
        pool_x = np.vstack([pts, pad])
        pool_e = np.concatenate([e, _improvements(evaluator, best, group, pad, phase)])
    ages = np.arange(pool_e.size)
    chosen = select_top(pool_e, config.pop_size)
    shade = init_state(
        pool_x[chosen],
        pool_e[chosen],
        rng,
        memory_size=config.memory_size,
        maximize=True,
        pbest_rate=config.pbest_rate,
    )
    return SubproblemState(
        group=group,
        shade=shade,
        recent_db=db,
        pop_ages=ages[chosen].copy(),
        lower=lower,
        upper=upper,
        capacity=n_db,
        next_age=int(pool_e.size),
    )


def _worst_index(fitness: np.ndarray, ages: np.ndarray) -> int:
    # lowest improvement first, older age breaks ties
    return int(np.lexsort((ages, fitness))[0])


def evolve_one_generation(
    state: SubproblemState,
    evaluator: CountingEvaluator,
    best: BestSolution,
    config: RbfShadeConfig,
    debug_problem: Optional[Problem] = None,
    phase: str = "generation",
) -> GenerationRecord:
    """One RBF-SHADE generation costing exactly ``config.q`` real FEs.

    ``best`` is updated in place when the subproblem improves ``x*``.  With
    ``debug_problem`` set, every population member is re-scored against the
    new ``x*`` outside the budget and the largest deviation from
    ``f_star - e(m)`` is reported.
    """
    q = config.q
    if not evaluator.budget.can_afford(q):
        raise BudgetExhausted(f"a generation needs {q} FEs")
    shade = state.shade
    group = state.group

    try:
        model = fit_rbf(state.recent_db.points, state.recent_db.values)
    except RBFFitError as exc:
        logger.info("RBF fit failed on group of %d (%s); selecting by distance", group.size, exc)
        model = None

    trials, F, CR, _ = generate_trials(shade, state.lower, state.upper)
    parent_e = shade.fitness.copy()
    if model is not None:
        pred_u = model.predict(trials)
        # parents are always real-evaluated, so their stored values take precedence
        chosen = select_top(pred_u, q)
    else:
        state.fallbacks += 1
        pred_u = None
        spread = cdist(trials, state.recent_db.points).min(axis=1)
        chosen = select_top(spread, q)

    Q = trials[chosen]
    e_real = _improvements(evaluator, best, group, Q, phase)

    wins = e_real > parent_e[chosen]
    if wins.any():
        update_history(shade, F[chosen][wins], CR[chosen][wins], e_real[wins] - parent_e[chosen][wins])

    db = state.recent_db
    if len(db) + q > state.capacity:
        db.replace_oldest(Q, e_real)
    else:
        db.append(Q, e_real)

    for u, e_u in zip(Q, e_real):
        w = _worst_index(shade.fitness, state.pop_ages)
        if shade.fitness[w] < e_u:
            shade.add_to_archive(shade.population[w])
            shade.population[w] = u
            shade.fitness[w] = e_u
            state.pop_ages[w] = state.next_age
            state.next_age += 1

    b = int(np.argmax(shade.fitness))
    e_b = float(shade.fitness[b])
    improved = e_b > 0.0
    if improved:
        best.f = best.f - e_b
        best.x[group] = shade.population[b]
        shade.fitness = shade.fitness - e_b
        db.rebase(e_b)

    shade.generation += 1
    state.generation += 1

    corr = None
    if pred_u is not None and q >= 2:
        p_sel = pred_u[chosen]
        if np.ptp(p_sel) > 0 and np.ptp(e_real) > 0:
            corr = float(np.corrcoef(rankdata(p_sel), rankdata(e_real))[0, 1])

    debug_err = None
    if debug_problem is not None:
        actual = debug_problem.evaluate_batch(best.splice(group, shade.population))
        debug_err = float(np.max(np.abs(actual - (best.f - shade.fitness))))

    return GenerationRecord(
        generation=state.generation,
        real_values=[float(v) for v in e_real],
        rank_correlation=corr,
        f_star=float(best.f),
        improved=improved,
        fallback=model is None,
        rebase_amount=e_b if improved else 0.0,
        debug_max_error=debug_err,
    )
