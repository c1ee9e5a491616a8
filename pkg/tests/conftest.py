"""Shared helpers: small hand-built problems with known structure."""

from __future__ import annotations

import numpy as np
import pytest

from ccopt.benchmarks import Problem


def make_problem(func, dimension, lower, upper, groups=None, separable=None, name="custom"):
    """Wrap a row-wise ``func(x) -> float`` as a vectorised Problem."""

    def batch(X):
        return np.array([func(row) for row in X], dtype=float)

    return Problem(
        name=name,
        dimension=dimension,
        lower=np.full(dimension, float(lower)),
        upper=np.full(dimension, float(upper)),
        function=batch,
        groups=groups,
        separable=separable,
    )


def vector_problem(batch_func, dimension, lower, upper, groups=(), separable=None, name="custom"):
    """Problem from an already vectorised ``(n, D) -> (n,)`` function."""
    if separable is None:
        in_groups = {i for g in groups for i in g}
        separable = tuple(i for i in range(dimension) if i not in in_groups)
    return Problem(
        name=name,
        dimension=dimension,
        lower=np.full(dimension, float(lower)),
        upper=np.full(dimension, float(upper)),
        function=batch_func,
        groups=tuple(tuple(g) for g in groups),
        separable=tuple(separable),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts (one line per criterion) after the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
