"""CEC 2010 style large-scale benchmark functions F1-F13.

Every suite member is built from one of six base functions, a seeded shift
vector, a seeded variable permutation that decides which coordinates belong
to nonseparable groups, and (for elliptic / rastrigin / ackley groups) a
seeded orthogonal rotation per group.  The optimum of every member sits at
the shift vector with value 0.

Group layout per id (``m`` is the group size, ``D`` the dimension):

=========  ===========================================================
F1 - F3    fully separable elliptic / rastrigin / ackley
F4 - F8    one m-dim group scaled by 1e6 plus D - m separable variables
F9 - F13   D // (2m) m-dim groups plus the remaining separable variables
=========  ===========================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "BENCHMARK_IDS",
    "BenchmarkSpec",
    "OutOfBoundsError",
    "Problem",
    "build_benchmark",
    "evaluate",
    "elliptic",
    "rastrigin",
    "ackley",
    "schwefel_1_2",
    "rosenbrock",
    "sphere",
]


class OutOfBoundsError(ValueError):
    """Raised when a point handed to a Problem leaves its box."""


# ---------------------------------------------------------------------------
# base functions, all vectorised over rows of a 2-D array
# ---------------------------------------------------------------------------


def elliptic(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    k = z.shape[1]
    if k == 1:
        weights = np.ones(1)
    else:
        weights = 10.0 ** (6.0 * np.arange(k) / (k - 1))
    return (z * z) @ weights


def rastrigin(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0, axis=1)


def ackley(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    k = z.shape[1]
    mean_sq = np.sum(z * z, axis=1) / k
    mean_cos = np.sum(np.cos(2.0 * np.pi * z), axis=1) / k
    # ordered so that z = 0 gives exactly 0
    return (20.0 - 20.0 * np.exp(-0.2 * np.sqrt(mean_sq))) + (np.exp(1.0) - np.exp(mean_cos))


def schwefel_1_2(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return np.sum(np.cumsum(z, axis=1) ** 2, axis=1)


def rosenbrock(z: np.ndarray) -> np.ndarray:
    """Rosenbrock on the shifted input; optimum at z = 0."""
    z = np.atleast_2d(z) + 1.0
    if z.shape[1] < 2:
        return (z[:, 0] - 1.0) ** 2
    head, tail = z[:, :-1], z[:, 1:]
    return np.sum(100.0 * (head * head - tail) ** 2 + (head - 1.0) ** 2, axis=1)


def sphere(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return np.sum(z * z, axis=1)


BASE_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "elliptic": elliptic,
    "rastrigin": rastrigin,
    "ackley": ackley,
    "schwefel1.2": schwefel_1_2,
    "rosenbrock": rosenbrock,
    "sphere": sphere,
}

_BOUNDS = {
    "elliptic": 100.0,
    "rastrigin": 5.0,
    "ackley": 32.0,
    "schwefel1.2": 100.0,
    "rosenbrock": 100.0,
}

# id -> (structure, group base, separable base, rotate groups)
_TABLE = {
    "F1": ("fully-separable", None, "elliptic", False),
    "F2": ("fully-separable", None, "rastrigin", False),
    "F3": ("fully-separable", None, "ackley", False),
    "F4": ("single-group", "elliptic", "elliptic", True),
    "F5": ("single-group", "rastrigin", "rastrigin", True),
    "F6": ("single-group", "ackley", "ackley", True),
    "F7": ("single-group", "schwefel1.2", "sphere", False),
    "F8": ("single-group", "rosenbrock", "sphere", False),
    "F9": ("multi-group", "elliptic", "elliptic", True),
    "F10": ("multi-group", "rastrigin", "rastrigin", True),
    "F11": ("multi-group", "ackley", "ackley", True),
    "F12": ("multi-group", "schwefel1.2", "sphere", False),
    "F13": ("multi-group", "rosenbrock", "sphere", False),
}

BENCHMARK_IDS: tuple[str, ...] = tuple(_TABLE)

SINGLE_GROUP_SCALE = 1.0e6


def _normalize_id(fid: str) -> str:
    key = str(fid).strip().upper()
    if key not in _TABLE:
        raise ValueError(f"unknown benchmark id {fid!r}; expected one of {', '.join(BENCHMARK_IDS)}")
    return key


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BenchmarkSpec:
    """Everything needed to rebuild one suite member."""

    id: str
    dimension: int
    group_size: int
    seed: int
    structure: str
    base_functions: tuple[str, ...]
    shift: np.ndarray = field(repr=False)
    rotations: tuple[np.ndarray, ...] = field(repr=False)
    groups: tuple[tuple[int, ...], ...]
    separable: tuple[int, ...]
    bounds: tuple[float, float]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "dimension": self.dimension,
            "group_size": self.group_size,
            "seed": self.seed,
            "bounds": list(self.bounds),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @staticmethod
    def from_json(doc: dict | str) -> "Problem":
        if isinstance(doc, str):
            doc = json.loads(doc)
        problem = build_benchmark(doc["id"], doc["dimension"], doc["group_size"], doc["seed"])
        if "bounds" in doc and tuple(doc["bounds"]) != problem.spec.bounds:
            raise ValueError(f"bounds {doc['bounds']} do not match {doc['id']}")
        return problem


@dataclass(frozen=True, eq=False)
class Problem:
    """A box-constrained black-box minimisation problem.

    ``function`` maps an ``(n, dimension)`` array to ``n`` fitness values.
    ``groups`` / ``separable`` carry the true interaction structure when it is
    known (benchmarks) and are ``None`` for genuinely black-box problems.
    """

    name: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    function: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    groups: Optional[tuple[tuple[int, ...], ...]] = None
    separable: Optional[tuple[int, ...]] = None
    spec: Optional[BenchmarkSpec] = field(default=None, repr=False)

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dimension,))
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dimension,))
        if np.any(lower >= upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", _readonly(lower))
        object.__setattr__(self, "upper", _readonly(upper))

    @property
    def has_structure(self) -> bool:
        return self.groups is not None and self.separable is not None

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise ValueError(f"expected points of length {self.dimension}, got shape {X.shape}")
        bad = (X < self.lower) | (X > self.upper)
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise OutOfBoundsError(
                f"coordinate {col} = {X[row, col]!r} outside [{self.lower[col]}, {self.upper[col]}]"
            )
        return X

    def evaluate(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError(f"expected a 1-D point, got shape {x.shape}")
        return float(self.function(self._check(x[None, :]))[0])

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        return np.asarray(self.function(self._check(X)), dtype=float)


def evaluate(problem: Problem, x: Sequence[float]) -> float:
    return problem.evaluate(x)


def _random_rotation(rng: np.random.Generator, m: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    # sign fix makes the factorisation unique for a given Gaussian draw
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def build_benchmark(fid: str, dimension: int = 1000, group_size: int = 50, seed: int = 0) -> Problem:
    """Build suite member ``fid`` at the requested size.

    Raises ``ValueError`` for an unknown id or when ``dimension`` cannot hold
    the group layout (partially separable ids need ``dimension >= 2 * group_size``).
    """
    fid = _normalize_id(fid)
    dimension = int(dimension)
    group_size = int(group_size)
    structure, group_base, sep_base, rotate = _TABLE[fid]
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if structure != "fully-separable":
        if group_size < 2:
            raise ValueError("group_size must be at least 2 for partially separable ids")
        if dimension < 2 * group_size:
            raise ValueError(f"{fid} needs dimension >= 2 * group_size ({2 * group_size}), got {dimension}")

    rng = np.random.default_rng(seed)
    half = _BOUNDS[group_base or sep_base]
    lb, ub = -half, half
    shift = lb + (0.1 + 0.8 * rng.random(dimension)) * (ub - lb)

    if structure == "fully-separable":
        n_groups = 0
    elif structure == "single-group":
        n_groups = 1
    else:
        n_groups = max(1, dimension // (2 * group_size))

    perm = rng.permutation(dimension)
    group_idx = [np.sort(perm[k * group_size:(k + 1) * group_size]) for k in range(n_groups)]
    sep_idx = np.sort(perm[n_groups * group_size:])
    rotations = tuple(_random_rotation(rng, group_size) for _ in range(n_groups)) if rotate else ()
    for rot in rotations:
        rot.setflags(write=False)

    group_fn = BASE_FUNCTIONS[group_base] if group_base else None
    sep_fn = BASE_FUNCTIONS[sep_base]
    scale = SINGLE_GROUP_SCALE if structure == "single-group" else 1.0
    shift_ro = _readonly(shift)

    def function(X: np.ndarray) -> np.ndarray:
        Z = X - shift_ro
        total = sep_fn(Z[:, sep_idx]) if sep_idx.size else np.zeros(Z.shape[0])
        for k, idx in enumerate(group_idx):
            zg = Z[:, idx]
            if rotations:
                zg = zg @ rotations[k]
            total = total + scale * group_fn(zg)
        return total

    groups = tuple(tuple(int(i) for i in g) for g in group_idx)
    groups = tuple(sorted(groups, key=lambda g: g[0]))
    separable = tuple(int(i) for i in sep_idx)
    base_functions = tuple([group_base] * n_groups + [sep_base]) if n_groups else (sep_base,)
    spec = BenchmarkSpec(
        id=fid,
        dimension=dimension,
        group_size=group_size,
        seed=int(seed),
        structure=structure,
        base_functions=base_functions,
        shift=shift_ro,
        rotations=rotations,
        groups=groups,
        separable=separable,
        bounds=(lb, ub),
    )
    return Problem(
        name=fid,
        dimension=dimension,
        lower=np.full(dimension, lb),
        upper=np.full(dimension, ub),
        function=function,
        groups=groups,
        separable=separable,
        spec=spec,
    )


def describe(problem: Problem) -> dict:
    """Human-readable structure summary used by ``ccopt bench-info``."""
    info = {"name": problem.name, "dimension": problem.dimension}
    if problem.spec is not None:
        info.update(
            structure=problem.spec.structure,
            group_size=problem.spec.group_size,
            base_functions=sorted(set(problem.spec.base_functions)),
            bounds=list(problem.spec.bounds),
            seed=problem.spec.seed,
            rotated=bool(problem.spec.rotations),
        )
    if problem.has_structure:
        info["n_groups"] = len(problem.groups)
        info["group_sizes"] = [len(g) for g in problem.groups]
        info["n_separable"] = len(problem.separable)
    return info

