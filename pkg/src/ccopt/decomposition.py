"""Variable decompositions and the decomposer registry.

A decomposer is any callable ``fn(problem, evaluate) -> subsets`` where
``evaluate`` is a budget-limited batch evaluator (each row is one real FE)
and ``subsets`` is an iterable of index collections (or a ready-made
:class:`Decomposition`).  Size-one subsets become singletons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from .benchmarks import Problem
from .budget import BudgetExhausted

__all__ = [
    "Decomposition",
    "MissingMetadataError",
    "decompose",
    "ideal_decompose",
    "register_decomposer",
    "registered_decomposers",
]


class MissingMetadataError(ValueError):
    """The problem carries no group-structure metadata."""


@dataclass(frozen=True)
class Decomposition:
    singletons: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    fe_cost: int = 0

    @classmethod
    def from_subsets(cls, subsets: Iterable[Iterable[int]], fe_cost: int = 0) -> "Decomposition":
        """Normalise arbitrary subsets into the canonical ordering.

        Singletons come out in ascending index order; groups are sorted
        internally and ordered by their smallest member.
        """
        singles, groups = [], []
        for s in subsets:
            members = sorted(int(i) for i in s)
            if not members:
                continue
            if len(members) == 1:
                singles.append(members[0])
            else:
                groups.append(tuple(members))
        groups.sort(key=lambda g: g[0])
        return cls(tuple(sorted(singles)), tuple(groups), int(fe_cost))

    def validate(self, dimension: int) -> "Decomposition":
        if self.fe_cost < 0:
            raise ValueError("fe_cost must be non-negative")
        if any(len(g) < 2 for g in self.groups):
            raise ValueError("every group needs at least two variables")
        seen = list(self.singletons) + [i for g in self.groups for i in g]
        if len(seen) != len(set(seen)):
            raise ValueError("decomposition subsets overlap")
        if sorted(seen) != list(range(dimension)):
            raise ValueError(f"decomposition does not cover exactly 0..{dimension - 1}")
        return self

    @property
    def n_subproblems(self) -> int:
        return len(self.singletons) + len(self.groups)

    def subsets(self) -> list[list[int]]:
        return [[i] for i in self.singletons] + [list(g) for g in self.groups]

    def to_json(self) -> dict:
        return {
            "singletons": list(self.singletons),
            "groups": [list(g) for g in self.groups],
            "fe_cost": self.fe_cost,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: Union[dict, str]) -> "Decomposition":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(
            tuple(int(i) for i in doc["singletons"]),
            tuple(tuple(int(i) for i in g) for g in doc["groups"]),
            int(doc.get("fe_cost", 0)),
        )


def ideal_decompose(problem: Problem) -> Decomposition:
    """Decompose by the problem's known structure at zero FE cost."""
    if not problem.has_structure:
        raise MissingMetadataError(f"problem {problem.name!r} has no group-structure metadata")
    subsets = [[i] for i in problem.separable] + [list(g) for g in problem.groups]
    return Decomposition.from_subsets(subsets).validate(problem.dimension)


Decomposer = Callable[[Problem, Callable[[np.ndarray], np.ndarray]], object]

_REGISTRY: dict[str, Decomposer] = {}


def register_decomposer(name: str, fn: Decomposer) -> None:
    _REGISTRY[name] = fn


def registered_decomposers() -> list[str]:
    return sorted(_REGISTRY)


def decompose(name: str, problem: Problem, budget: int = 0) -> Decomposition:
    """Run a registered decomposer with at most ``budget`` real evaluations.

    The returned ``fe_cost`` is the number of evaluations the decomposer
    actually used; the optimizer charges it to the run budget.
    """
    if name not in _REGISTRY:
        raise KeyError(f"unknown decomposer {name!r}; registered: {registered_decomposers()}")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    used = 0

    def limited(X: np.ndarray) -> np.ndarray:
        nonlocal used
        X = np.atleast_2d(X)
        if used + X.shape[0] > budget:
            raise BudgetExhausted(f"decomposer {name!r} exceeded its budget of {budget} FEs")
        used += X.shape[0]
        return problem.evaluate_batch(X)

    out = _REGISTRY[name](problem, limited)
    if isinstance(out, Decomposition):
        out = Decomposition.from_subsets(out.subsets())
    else:
        out = Decomposition.from_subsets(out)
    return Decomposition(out.singletons, out.groups, used).validate(problem.dimension)


register_decomposer("ideal", lambda problem, _evaluate: ideal_decompose(problem))
register_decomposer("monolithic", lambda problem, _evaluate: [range(problem.dimension)])
register_decomposer("all-singleton", lambda problem, _evaluate: [[i] for i in range(problem.dimension)])
