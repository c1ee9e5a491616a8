"""Cheap fitness-improvement predictors.

* :func:`fit_pr` / :class:`PRModel` - least-squares polynomial of degree 2 or 5
  on a 1-D interval, fitted in a coordinate mapped to [-1, 1].
* :func:`fdc` - fitness distance correlation of a sample set.
* :func:`fit_rbf` / :class:`RBFModel` - cubic RBF interpolant with a linear tail.
* :func:`maximize_poly` - exact global maximiser of a polynomial on an interval.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly
from scipy.spatial.distance import cdist

logger = logging.getLogger(__name__)

__all__ = [
    "InsufficientSamplesError",
    "PRModel",
    "RBFFitError",
    "RBFModel",
    "SampleSet",
    "fdc",
    "fdc_from_distances",
    "fit_pr",
    "fit_rbf",
    "maximize_poly",
]


class InsufficientSamplesError(ValueError):
    """Not enough distinct abscissae for the requested polynomial degree."""


class RBFFitError(np.linalg.LinAlgError):
    """The augmented RBF system is singular or numerically unusable."""


# ---------------------------------------------------------------------------
# sample storage
# ---------------------------------------------------------------------------


class SampleSet:
    """Real-evaluated points with their improvement values and age stamps.

    Entries are kept in insertion order, so ``ages`` is strictly increasing
    along the arrays and the oldest entries are always at the front.
    """

    def __init__(self, points=None, values=None, dim: Optional[int] = None):
        if points is None:
            if dim is None:
                raise ValueError("need points or dim")
            points = np.empty((0, dim))
            values = np.empty(0)
        self.points = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        self.values = np.asarray(values, dtype=float).reshape(-1).copy()
        if self.points.shape[0] != self.values.shape[0]:
            raise ValueError("points and values must have equal length")
        self.ages = np.arange(self.values.size, dtype=np.int64)
        self._next_age = self.values.size

    def __len__(self) -> int:
        return self.values.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def append(self, points, values) -> None:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(values, dtype=float).reshape(-1)
        n = values.size
        self.points = np.vstack([self.points, points])
        self.values = np.concatenate([self.values, values])
        self.ages = np.concatenate([self.ages, np.arange(self._next_age, self._next_age + n)])
        self._next_age += n

    def replace_oldest(self, points, values) -> None:
        """Drop as many oldest entries as there are new ones, then append."""
        n = np.asarray(values).size
        keep = slice(min(n, len(self)), None)
        self.points, self.values, self.ages = self.points[keep], self.values[keep], self.ages[keep]
        self.append(points, values)

    def rebase(self, delta: float) -> None:
        self.values = self.values - delta


# ---------------------------------------------------------------------------
# polynomial regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PRModel:
    """Least-squares polynomial surrogate on a 1-D interval.

    ``coefficients`` are in descending powers of the original variable (as
    ``numpy.polyval`` expects).  Predictions use ``scaled_coefficients``, the
    ascending-power coefficients in ``t = (x - center) / half_width``.
    """

    degree: int
    domain: tuple[float, float]
    x_scale: tuple[float, float]
    scaled_coefficients: np.ndarray = field(repr=False)

    @cached_property
    def coefficients(self) -> np.ndarray:
        # p(x) = q((x - c) / h), expanded into powers of x
        center, half = self.x_scale
        composed = np.polynomial.Polynomial(self.scaled_coefficients)(
            np.polynomial.Polynomial([-center / half, 1.0 / half])
        )
        ascending = np.zeros(self.degree + 1)
        ascending[: composed.coef.size] = composed.coef
        return ascending[::-1].copy()

    def to_unit(self, x):
        center, half = self.x_scale
        return (np.asarray(x, dtype=float) - center) / half

    def predict(self, x):
        return npoly.polyval(self.to_unit(x), self.scaled_coefficients)

    __call__ = predict


def fit_pr(x, y, degree: int, domain: Optional[tuple[float, float]] = None) -> PRModel:
    """Least-squares polynomial of ``degree`` through ``(x, y)``.

    ``domain`` fixes the interval mapped to [-1, 1]; it defaults to the data
    range.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    degree = int(degree)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if np.unique(x).size < degree + 1:
        raise InsufficientSamplesError(
            f"degree {degree} needs {degree + 1} distinct abscissae, got {np.unique(x).size}"
        )
    lo, hi = (float(x.min()), float(x.max())) if domain is None else map(float, domain)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    if half <= 0:
        half = 1.0
    t = (x - center) / half
    V = np.vander(t, degree + 1, increasing=True)
    scaled, *_ = np.linalg.lstsq(V, y, rcond=None)
    return PRModel(
        degree=degree,
        domain=(lo, hi),
        x_scale=(center, half),
        scaled_coefficients=scaled,
    )


def maximize_poly(model: PRModel, lb: float, ub: float) -> float:
    """Global maximiser of ``model`` on ``[lb, ub]``.

    Candidates are the two endpoints plus every stationary point, found as
    eigenvalues of the derivative's companion matrix.  Real parts of nearly
    real roots are kept (clipped into the interval) so no stationary point is
    lost to round-off.  Exact ties go to the smaller ``x``.
    """
    lb, ub = float(lb), float(ub)
    if not lb < ub:
        raise ValueError("need lb < ub")
    center, half = model.x_scale
    deriv = np.trim_zeros(npoly.polyder(model.scaled_coefficients), "b")
    candidates = [lb, ub]
    if deriv.size > 1:
        roots = npoly.polyroots(deriv)
        xs = center + half * roots.real
        candidates.extend(float(v) for v in np.clip(xs, lb, ub))
    candidates = np.array(sorted(set(candidates)))
    values = model.predict(candidates)
    return float(candidates[int(np.argmax(values))])


# ---------------------------------------------------------------------------
# fitness distance correlation
# ---------------------------------------------------------------------------


def fdc_from_distances(fitness, distances) -> float:
    """Pearson correlation of fitness values with precomputed distances ``d*``.

    Degenerate inputs (zero variance in either series) return 1.0.
    """
    fitness = np.asarray(fitness, dtype=float).reshape(-1)
    dist = np.asarray(distances, dtype=float).reshape(-1)
    if dist.size != fitness.size:
        raise ValueError("fitness and distances must have equal length")
    df = fitness - fitness.mean()
    dd = dist - dist.mean()
    denom = np.sqrt(np.sum(df * df)) * np.sqrt(np.sum(dd * dd))
    if denom == 0.0 or not np.isfinite(denom):
        return 1.0
    return float(np.clip(np.sum(df * dd) / denom, -1.0, 1.0))


def fdc(points, fitness) -> float:
    """Pearson correlation between fitness and distance to the best sample.

    Minimisation orientation: the best sample is the one with the lowest
    fitness.  Degenerate inputs (zero variance in either series) return 1.0.
    """
    fitness = np.asarray(fitness, dtype=float).reshape(-1)
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] != fitness.size:
        raise ValueError("points and fitness must have equal length")
    if fitness.size < 3:
        raise ValueError("fdc needs at least 3 samples")
    best = pts[int(np.argmin(fitness))]
    return fdc_from_distances(fitness, np.sqrt(np.sum((pts - best) ** 2, axis=1)))


# ---------------------------------------------------------------------------
# cubic RBF with linear tail
# ---------------------------------------------------------------------------

DEDUP_TOL = 1e-12
PIVOT_GROWTH_WARN = 1e12


@dataclass(frozen=True)
class RBFModel:
    """``predict(x) = sum_i w_i |x - t_i|^3 + beta . x + alpha``.

    ``weights``, ``tail_linear`` and ``tail_const`` are expressed in the
    original coordinates.  The system is solved (and predictions computed) in
    a translated, uniformly scaled copy of the data, which leaves the
    interpolant unchanged because the cubic kernel is homogeneous and the
    tail is affine.
    """

    centers: np.ndarray
    weights: np.ndarray
    tail_linear: np.ndarray
    tail_const: float
    offset: np.ndarray = field(repr=False)
    scale: float = field(repr=False)
    scaled_weights: np.ndarray = field(repr=False)
    scaled_tail: np.ndarray = field(repr=False)
    pivot_growth: float = field(default=1.0, repr=False)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xs = (X - self.offset) / self.scale
        Cs = (self.centers - self.offset) / self.scale
        r = cdist(Xs, Cs)
        return (r ** 3) @ self.scaled_weights + Xs @ self.scaled_tail[:-1] + self.scaled_tail[-1]

    __call__ = predict


def _keep_mask(dist: np.ndarray, tol: float) -> np.ndarray:
    # a point is dropped when a later point lies within tol of it
    return ~np.triu(dist <= tol, k=1).any(axis=1)


def dedupe(points: np.ndarray, values: np.ndarray, tol: float = DEDUP_TOL):
    """Drop points within ``tol`` of a later point; the most recent value wins."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    if points.shape[0] < 2:
        return points, values
    keep = _keep_mask(cdist(points, points), tol)
    return points[keep], values[keep]


def fit_rbf(points, values, dim: Optional[int] = None) -> RBFModel:
    """Interpolate ``values`` at ``points`` with a cubic RBF plus linear tail.

    Solves the dense augmented system

        [ Phi  P ] [w]   [y]
        [ P^T  0 ] [c] = [0],   Phi_ij = |t_i - t_j|^3,  P = [t, 1]

    by LU with partial pivoting.  Raises :class:`RBFFitError` when fewer than
    ``dim + 2`` distinct points remain, when the points are affinely
    degenerate, or when the factorisation is singular.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    if points.shape[0] != values.size:
        raise ValueError("points and values must have equal length")
    dim = points.shape[1] if dim is None else int(dim)
    if points.shape[1] != dim:
        raise ValueError(f"points have dimension {points.shape[1]}, expected {dim}")
    dist = cdist(points, points)
    keep = _keep_mask(dist, DEDUP_TOL)
    t, y = points[keep], values[keep]
    dist = dist[np.ix_(keep, keep)] if not keep.all() else dist
    n = t.shape[0]
    if n < dim + 2:
        raise RBFFitError(f"need at least {dim + 2} distinct points, have {n}")

    offset = t.mean(axis=0)
    scale = float(np.max(np.abs(t - offset)))
    if scale == 0.0:
        raise RBFFitError("all points coincide")
    ts = (t - offset) / scale
    P = np.hstack([ts, np.ones((n, 1))])
    if np.linalg.matrix_rank(P) < dim + 1:
        raise RBFFitError("points are affinely dependent; the linear tail is not unisolvent")

    A = np.zeros((n + dim + 1, n + dim + 1))
    A[:n, :n] = (dist / scale) ** 3
    A[:n, n:] = P
    A[n:, :n] = P.T
    rhs = np.concatenate([y, np.zeros(dim + 1)])
    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() == 0.0 or not np.all(np.isfinite(lu)):
        raise RBFFitError("singular augmented RBF system")
    growth = float(diag.max() / diag.min())
    if growth > PIVOT_GROWTH_WARN:
        logger.debug("ill-conditioned RBF system: pivot ratio %.3g with %d centers", growth, n)
    sol = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    if not np.all(np.isfinite(sol)):
        raise RBFFitError("RBF solve produced non-finite coefficients")

    w_s, tail_s = sol[:n], sol[n:]
    weights = w_s / scale ** 3
    beta = tail_s[:-1] / scale
    alpha = float(tail_s[-1] - beta @ offset)
    return RBFModel(
        centers=t,
        weights=weights,
        tail_linear=beta,
        tail_const=alpha,
        offset=offset,
        scale=scale,
        scaled_weights=w_s,
        scaled_tail=tail_s,
        pivot_growth=growth,
    )
