"""Cooperative-coevolution drivers: ASMCC, PS-CC and SHADE-CC.

ASMCC
    1. random context vector ``x^c`` (1 FE);
    2. two-layer PR search on every singleton against the fixed ``x^c``;
    3. ``x*`` = PR optima on singletons, random values on groups (1 FE);
    4. RBF-SHADE initialisation per group (``db_factor * D_g`` FEs each);
    5. round-robin RBF-SHADE generations (``q`` FEs each) while ``q`` FEs remain.

PS-CC replaces steps 4-5 with plain SHADE (``p`` FEs per init and per
generation).  SHADE-CC runs plain SHADE round-robin over every subproblem,
singletons included, starting from a random ``x*``.

Plain SHADE subproblems store fitness improvements against ``x*`` and are
rebased exactly like RBF-SHADE populations, so stored values stay
comparable when ``x*`` moves.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .benchmarks import Problem
from .budget import DEFAULT_MAX_FES, BudgetExhausted, CountingEvaluator, EvalBudget, downsample_trace
from .decomposition import Decomposition, ideal_decompose
from .pr_search import ContextVector, PrSearchConfig, solve_1d
from .rbf_shade import BestSolution, RbfShadeConfig, evolve_one_generation, init_subproblem
from .shade import ShadeState, init_state, shade_generation

logger = logging.getLogger(__name__)

__all__ = [
    "AlgorithmConfig",
    "BestSolution",
    "ContextVector",
    "EvalBudget",
    "RunResult",
    "VARIANTS",
    "normalize_variant",
    "run_asmcc",
    "run_variant",
]

VARIANTS = ("SHADE-CC", "PS-CC", "ASMCC")
TRACE_POINTS = 10_000


def normalize_variant(name: str) -> str:
    key = str(name).strip().upper().replace("_", "-")
    aliases = {"SHADECC": "SHADE-CC", "PSCC": "PS-CC"}
    key = aliases.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; expected one of {VARIANTS}")
    return key


@dataclass(frozen=True)
class AlgorithmConfig:
    d_s: int = 100
    epsilon: float = 0.8
    r2: float = 15.0
    r5: float = 10.0
    sampling: str = "grid"
    pop_size: int = 100
    q: int = 10
    db_factor: int = 5
    memory_size: Optional[int] = None
    pbest_rate: float = 0.1

    def __post_init__(self):
        self.pr_config()
        self.rbf_config()
        if not 0.0 < self.pbest_rate <= 1.0:
            raise ValueError("pbest_rate must lie in (0, 1]")
        if self.memory_size is not None and self.memory_size < 1:
            raise ValueError("memory_size must be positive")

    def pr_config(self) -> PrSearchConfig:
        return PrSearchConfig(d_s=self.d_s, epsilon=self.epsilon, r2=self.r2, r5=self.r5, sampling=self.sampling)

    def rbf_config(self) -> RbfShadeConfig:
        return RbfShadeConfig(
            pop_size=self.pop_size,
            q=self.q,
            db_factor=self.db_factor,
            memory_size=self.memory_size,
            pbest_rate=self.pbest_rate,
        )

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "AlgorithmConfig":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass
class RunResult:
    variant: str
    seed: int
    problem: dict
    config: dict
    max_fes: int
    decomposition: Decomposition
    f_star: float
    best_fitness: float
    x_star: np.ndarray
    fes_used: int
    charges: dict
    trace: list
    generations: list
    notes: list = field(default_factory=list)
    debug_max_error: Optional[float] = None
    events: list = field(default_factory=list, repr=False)

    def to_json(self, include_x: bool = False) -> dict:
        doc = {
            "variant": self.variant,
            "seed": self.seed,
            "problem": self.problem,
            "config": self.config,
            "max_fes": self.max_fes,
            "decomposition": self.decomposition.to_json(),
            "f_star": self.f_star,
            "best_fitness": self.best_fitness,
            "fes_used": self.fes_used,
            "charges": self.charges,
            "trace": [[fe, v] for fe, v in self.trace],
            "generations": self.generations,
            "notes": self.notes,
        }
        if self.debug_max_error is not None:
            doc["debug_max_error"] = self.debug_max_error
        if include_x:
            doc["x_star"] = [float(v) for v in self.x_star]
        return doc

    def dumps(self, include_x: bool = False) -> str:
        return json.dumps(self.to_json(include_x), sort_keys=True)

    def write_events(self, path) -> None:
        """Per-subproblem / per-generation trace records as JSON lines."""
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev, sort_keys=True) + "\n")


class _ShadeSubproblem:
    """Plain SHADE on one subproblem, scored as improvement against ``x*``."""

    def __init__(self, evaluator, group, best: BestSolution, config: AlgorithmConfig, rng, phase="init"):
        self.group = np.asarray(group, dtype=int)
        self.evaluator = evaluator
        self.best = best
        problem = evaluator.problem
        self.lower = problem.lower[self.group]
        self.upper = problem.upper[self.group]
        p = config.pop_size
        if not evaluator.budget.can_afford(p):
            raise BudgetExhausted(f"initialising a SHADE population needs {p} FEs")
        pop = self.lower + rng.random((p, self.group.size)) * (self.upper - self.lower)
        self.state: ShadeState = init_state(
            pop,
            self._improvements(pop, phase),
            rng,
            memory_size=config.memory_size,
            maximize=True,
            pbest_rate=config.pbest_rate,
        )
        self.generation = 0

    def _improvements(self, subs, phase):
        return self.best.f - self.evaluator.evaluate_batch(self.best.splice(self.group, subs), phase)

    def step(self, phase="generation") -> bool:
        shade_generation(self.state, lambda U: self._improvements(U, phase), self.lower, self.upper)
        self.generation += 1
        b = int(np.argmax(self.state.fitness))
        e_b = float(self.state.fitness[b])
        if e_b > 0.0:
            self.best.f -= e_b
            self.best.x[self.group] = self.state.population[b]
            self.state.fitness = self.state.fitness - e_b
            return True
        return False


def _uniform(problem: Problem, rng: np.random.Generator) -> np.ndarray:
    return problem.lower + rng.random(problem.dimension) * (problem.upper - problem.lower)


def run_variant(
    variant: str,
    problem: Problem,
    decomposition: Optional[Decomposition] = None,
    config: AlgorithmConfig = AlgorithmConfig(),
    seed: int = 0,
    max_fes: int = DEFAULT_MAX_FES,
    *,
    debug: bool = False,
    record_events: bool = False,
) -> RunResult:
    """Run one CC variant to budget exhaustion.

    ``decomposition`` defaults to the ideal one; its ``fe_cost`` is charged
    up front.  ``debug`` re-checks stored improvements against the real
    function after every RBF-SHADE generation (outside the budget).
    """
    variant = normalize_variant(variant)
    if decomposition is None:
        decomposition = ideal_decompose(problem)
    decomposition.validate(problem.dimension)
    rng = np.random.default_rng(seed)
    budget = EvalBudget(max_fes)
    if decomposition.fe_cost:
        budget.charge(decomposition.fe_cost, "decomposition")
    evaluator = CountingEvaluator(problem, budget)
    notes: list[str] = []
    events: list[dict] = []
    debug_err: Optional[float] = None

    if variant == "SHADE-CC":
        x0 = _uniform(problem, rng)
        best = BestSolution(x0, evaluator.evaluate(x0, "context"))
        subsets = [[i] for i in decomposition.singletons] + [list(g) for g in decomposition.groups]
        subs = []
        for s in subsets:
            try:
                subs.append(_ShadeSubproblem(evaluator, s, best, config, rng))
            except BudgetExhausted:
                notes.append(f"budget exhausted before initialising subproblem {s[0]}")
                break
        gens = _round_robin(subs, budget, config.pop_size, lambda sp: sp.step())
    else:
        xc = _uniform(problem, rng)
        context = ContextVector(xc, evaluator.evaluate(xc, "context"))
        pr_cfg = config.pr_config()
        x_star = xc.copy()
        truncated = 0
        for i in decomposition.singletons:
            res = solve_1d(evaluator, context, i, pr_cfg, rng)
            truncated += res.truncated
            if res.evaluations:
                x_star[i] = res.x
            if record_events:
                events.append({"kind": "pr_search", **res.trace})
        if truncated:
            notes.append(f"{truncated} singleton searches truncated by the budget")

        for g in decomposition.groups:
            x_star[list(g)] = problem.lower[list(g)] + rng.random(len(g)) * (
                problem.upper[list(g)] - problem.lower[list(g)]
            )
        if budget.can_afford(1):
            best = BestSolution(x_star, evaluator.evaluate(x_star, "assemble"))
        else:
            notes.append("no budget left to evaluate the assembled solution; keeping the context vector")
            best = BestSolution(xc.copy(), context.fitness)

        subs = []
        rbf_cfg = config.rbf_config()
        for g in decomposition.groups:
            try:
                if variant == "ASMCC":
                    subs.append(init_subproblem(evaluator, g, best, rbf_cfg, rng))
                else:
                    subs.append(_ShadeSubproblem(evaluator, g, best, config, rng))
            except BudgetExhausted:
                notes.append(f"budget exhausted before initialising group starting at {g[0]}; skipped")

        if variant == "ASMCC":
            oracle = problem if debug else None
            worst = [0.0]

            def step(state):
                rec = evolve_one_generation(state, evaluator, best, rbf_cfg, debug_problem=oracle)
                if rec.debug_max_error is not None:
                    worst[0] = max(worst[0], rec.debug_max_error)
                if record_events:
                    events.append({"kind": "generation", "group": int(state.group[0]), **rec.to_json()})

            gens = _round_robin(subs, budget, config.q, step)
            if debug:
                debug_err = worst[0]
        else:
            gens = _round_robin(subs, budget, config.pop_size, lambda sp: sp.step())

    log = evaluator.fitness_log()
    finite = log[~np.isnan(log)]
    best_fitness = float(min(best.f, finite.min())) if finite.size else float(best.f)
    return RunResult(
        variant=variant,
        seed=int(seed),
        problem=problem.spec.to_json() if problem.spec is not None else {"name": problem.name, "dimension": problem.dimension},
        config=config.to_json(),
        max_fes=int(max_fes),
        decomposition=decomposition,
        f_star=float(best.f),
        best_fitness=best_fitness,
        x_star=best.x.copy(),
        fes_used=budget.used,
        charges=budget.charge_log(),
        trace=downsample_trace(log, TRACE_POINTS),
        generations=gens,
        notes=notes,
        debug_max_error=debug_err,
        events=events,
    )


def _round_robin(subs: list, budget: EvalBudget, cost: int, step) -> list[int]:
    """Visit subproblems cyclically, one generation each, while ``cost`` FEs remain."""
    gens = [0] * len(subs)
    k = 0
    while subs and budget.can_afford(cost):
        step(subs[k])
        gens[k] += 1
        k = (k + 1) % len(subs)
    return gens


def run_asmcc(
    problem: Problem,
    decomposition: Optional[Decomposition] = None,
    config: AlgorithmConfig = AlgorithmConfig(),
    seed: int = 0,
    max_fes: int = DEFAULT_MAX_FES,
    **kwargs,
) -> RunResult:
    return run_variant("ASMCC", problem, decomposition, config, seed, max_fes, **kwargs)
