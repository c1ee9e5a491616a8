"""Success-history based adaptive differential evolution (SHADE).

The state is orientation aware: with ``maximize=True`` larger values are
better (used for fitness improvements inside the CC framework), otherwise
smaller.  Success weights are always the absolute value change, so they stay
positive in both modes.

Canonical settings: memory size ``H = p``, ``M_F = M_CR = 0.5`` initially,
current-to-pbest/1 with the pbest drawn from the top ``ceil(0.1 p)``, archive
capacity ``p`` with random eviction, ``F ~ Cauchy(M_F, 0.1)`` regenerated
while ``F <= 0`` and truncated at 1, ``CR ~ N(M_CR, 0.1)`` clipped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ShadeState",
    "binomial_crossover",
    "current_to_pbest",
    "generate_trial",
    "generate_trials",
    "init_state",
    "repair_midpoint",
    "sample_parameters",
    "shade_generation",
    "shade_optimize",
    "update_history",
]

MIN_POPULATION = 4


@dataclass
class ShadeState:
    population: np.ndarray
    fitness: np.ndarray
    memory_f: np.ndarray
    memory_cr: np.ndarray
    rng: np.random.Generator = field(repr=False)
    maximize: bool = False
    pbest_rate: float = 0.1
    memory_index: int = 0
    archive: np.ndarray = field(default=None, repr=False)
    archive_size: int = 0
    generation: int = 0

    def __post_init__(self):
        if self.archive is None:
            self.archive = np.empty((0, self.population.shape[1]))
        if self.archive_size <= 0:
            self.archive_size = self.population.shape[0]

    @property
    def size(self) -> int:
        return self.population.shape[0]

    @property
    def dim(self) -> int:
        return self.population.shape[1]

    def better(self, a, b):
        """Elementwise "a strictly better than b"."""
        return np.greater(a, b) if self.maximize else np.less(a, b)

    def order(self) -> np.ndarray:
        """Indices from best to worst; stable, so ties keep index order."""
        key = -self.fitness if self.maximize else self.fitness
        return np.argsort(key, kind="stable")

    def best_index(self) -> int:
        return int(self.order()[0])

    def add_to_archive(self, points: np.ndarray) -> None:
        points = np.atleast_2d(points)
        if points.size == 0:
            return
        self.archive = np.vstack([self.archive, points])
        excess = self.archive.shape[0] - self.archive_size
        if excess > 0:
            drop = self.rng.choice(self.archive.shape[0], size=excess, replace=False)
            self.archive = np.delete(self.archive, drop, axis=0)


def init_state(
    population,
    fitness,
    rng: np.random.Generator,
    *,
    memory_size: Optional[int] = None,
    maximize: bool = False,
    pbest_rate: float = 0.1,
    archive_size: Optional[int] = None,
) -> ShadeState:
    population = np.atleast_2d(np.asarray(population, dtype=float)).copy()
    fitness = np.asarray(fitness, dtype=float).reshape(-1).copy()
    p = population.shape[0]
    if p < MIN_POPULATION:
        raise ValueError(f"SHADE needs a population of at least {MIN_POPULATION}, got {p}")
    if fitness.size != p:
        raise ValueError("population and fitness must have equal length")
    h = p if memory_size is None else int(memory_size)
    return ShadeState(
        population=population,
        fitness=fitness,
        memory_f=np.full(h, 0.5),
        memory_cr=np.full(h, 0.5),
        rng=rng,
        maximize=maximize,
        pbest_rate=pbest_rate,
        archive_size=p if archive_size is None else int(archive_size),
    )


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------


def current_to_pbest(x_i, x_pbest, x_r1, x_r2, F):
    """v = x_i + F (x_pbest - x_i) + F (x_r1 - x_r2); broadcasts over rows."""
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    return x_i + F * (x_pbest - x_i) + F * (x_r1 - x_r2)


def binomial_crossover(x_i, v, CR, rng: np.random.Generator):
    x_i = np.atleast_2d(x_i)
    v = np.atleast_2d(v)
    n, d = x_i.shape
    CR = np.broadcast_to(np.asarray(CR, dtype=float).reshape(-1, 1), (n, 1))
    mask = rng.random((n, d)) < CR
    mask[np.arange(n), rng.integers(0, d, size=n)] = True
    return np.where(mask, v, x_i)


def repair_midpoint(trial, parent, lower, upper):
    """Put each violating coordinate halfway between the parent and the bound."""
    trial = np.array(trial, dtype=float)
    below = trial < lower
    above = trial > upper
    trial = np.where(below, (parent + lower) / 2.0, trial)
    trial = np.where(above, (parent + upper) / 2.0, trial)
    return trial


def sample_parameters(state: ShadeState, size: Optional[int] = None):
    """Draw (F, CR, memory slots) for ``size`` individuals."""
    n = state.size if size is None else int(size)
    rng = state.rng
    slots = rng.integers(0, state.memory_f.size, size=n)
    cr = np.clip(rng.normal(state.memory_cr[slots], 0.1), 0.0, 1.0)
    mu_f = state.memory_f[slots]
    f = mu_f + 0.1 * np.tan(np.pi * (rng.random(n) - 0.5))
    bad = f <= 0.0
    while bad.any():
        f[bad] = mu_f[bad] + 0.1 * np.tan(np.pi * (rng.random(int(bad.sum())) - 0.5))
        bad = f <= 0.0
    f = np.minimum(f, 1.0)
    return f, cr, slots


def _pick_indices(state: ShadeState, targets: np.ndarray):
    """pbest, r1 (population) and r2 (population + archive) for each target."""
    rng = state.rng
    p = state.size
    n = targets.size
    top = max(1, int(math.ceil(state.pbest_rate * p)))
    pbest = state.order()[rng.integers(0, top, size=n)]
    r1 = rng.integers(0, p, size=n)
    clash = r1 == targets
    while clash.any():
        r1[clash] = rng.integers(0, p, size=int(clash.sum()))
        clash = r1 == targets
    pool = p + state.archive.shape[0]
    r2 = rng.integers(0, pool, size=n)
    clash = (r2 == targets) | (r2 == r1)
    while clash.any():
        r2[clash] = rng.integers(0, pool, size=int(clash.sum()))
        clash = (r2 == targets) | (r2 == r1)
    return pbest, r1, r2


def _member(state: ShadeState, idx: np.ndarray) -> np.ndarray:
    union = np.vstack([state.population, state.archive]) if state.archive.size else state.population
    return union[idx]


def generate_trials(state: ShadeState, lower, upper, F=None, CR=None):
    """One trial per population member.  Returns ``(trials, F, CR, slots)``."""
    if state.size < MIN_POPULATION:
        raise ValueError(f"SHADE needs a population of at least {MIN_POPULATION}")
    slots = None
    if F is None or CR is None:
        F, CR, slots = sample_parameters(state)
    targets = np.arange(state.size)
    pbest, r1, r2 = _pick_indices(state, targets)
    X = state.population
    v = current_to_pbest(X, X[pbest], X[r1], _member(state, r2), F)
    u = binomial_crossover(X, v, CR, state.rng)
    return repair_midpoint(u, X, lower, upper), np.asarray(F), np.asarray(CR), slots


def generate_trial(state: ShadeState, i: int, lower, upper, F: Optional[float] = None, CR: Optional[float] = None):
    """Single-target version of :func:`generate_trials`: ``(trial, F_i, CR_i)``."""
    if state.size < MIN_POPULATION:
        raise ValueError(f"SHADE needs a population of at least {MIN_POPULATION}")
    if F is None or CR is None:
        f_draw, cr_draw, _ = sample_parameters(state, 1)
        F = float(f_draw[0]) if F is None else F
        CR = float(cr_draw[0]) if CR is None else CR
    pbest, r1, r2 = _pick_indices(state, np.array([i]))
    x = state.population[i]
    v = current_to_pbest(x, state.population[pbest[0]], state.population[r1[0]], _member(state, r2)[0], F)
    u = binomial_crossover(x, v, CR, state.rng)[0]
    return repair_midpoint(u, x, lower, upper), float(F), float(CR)


def update_history(state: ShadeState, F_success, CR_success, delta) -> None:
    """Write weighted Lehmer mean of F and weighted mean of CR into the ring memory."""
    F_success = np.asarray(F_success, dtype=float).reshape(-1)
    if F_success.size == 0:
        return
    CR_success = np.asarray(CR_success, dtype=float).reshape(-1)
    w = np.asarray(delta, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("success weights must be positive")
    w = w / w.sum()
    denom = np.sum(w * F_success)
    if denom > 0:
        state.memory_f[state.memory_index] = np.sum(w * F_success ** 2) / denom
    state.memory_cr[state.memory_index] = np.sum(w * CR_success)
    state.memory_index = (state.memory_index + 1) % state.memory_f.size


# ---------------------------------------------------------------------------
# generational driver
# ---------------------------------------------------------------------------


def shade_generation(state: ShadeState, evaluate: Callable[[np.ndarray], np.ndarray], lower, upper) -> int:
    """One full SHADE generation: p trials, p evaluations, greedy replacement.

    Returns the number of successful trials.
    """
    trials, F, CR, _ = generate_trials(state, lower, upper)
    values = np.asarray(evaluate(trials), dtype=float)
    improved = state.better(values, state.fitness)
    not_worse = improved | (values == state.fitness)
    if improved.any():
        delta = np.abs(values[improved] - state.fitness[improved])
        update_history(state, F[improved], CR[improved], delta)
        state.add_to_archive(state.population[improved])
    state.population[not_worse] = trials[not_worse]
    state.fitness[not_worse] = values[not_worse]
    state.generation += 1
    return int(improved.sum())


@dataclass
class ShadeResult:
    x: np.ndarray
    fitness: float
    evaluations: int
    generations: int


def shade_optimize(
    func: Callable[[np.ndarray], np.ndarray],
    lower,
    upper,
    budget: int,
    *,
    pop_size: int = 100,
    rng: Optional[np.random.Generator] = None,
    maximize: bool = False,
    memory_size: Optional[int] = None,
    pbest_rate: float = 0.1,
) -> ShadeResult:
    """Standalone SHADE on a box; ``func`` maps an (n, d) batch to n values.

    The initial population costs ``pop_size`` evaluations, each generation
    another ``pop_size``; a generation is only started when it fits.
    """
    rng = np.random.default_rng() if rng is None else rng
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if budget < pop_size:
        raise ValueError(f"budget {budget} cannot cover the initial population of {pop_size}")
    pop = lower + rng.random((pop_size, lower.size)) * (upper - lower)
    used = pop_size
    state = init_state(pop, func(pop), rng, memory_size=memory_size, maximize=maximize, pbest_rate=pbest_rate)
    while used + pop_size <= budget:
        shade_generation(state, func, lower, upper)
        used += pop_size
    b = state.best_index()
    return ShadeResult(state.population[b].copy(), float(state.fitness[b]), used, state.generation)
