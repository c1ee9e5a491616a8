"""Experiment harness: statistics, aggregation, CSV and batteries."""

from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccopt.harness import (
    ExperimentConfig,
    ResultTable,
    aggregate,
    cohens_d,
    friedman_ranks,
    mark,
    report,
    run_experiment,
)

# ── Cohen's d ──────────────────────────────────────────────────────────


def test_cohens_d_equal_samples():
    assert cohens_d([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0


def test_cohens_d_degenerate_sentinel():
    assert cohens_d([0.0, 0.0], [1.0, 1.0]) == -math.inf
    assert cohens_d([1.0, 1.0], [0.0, 0.0]) == math.inf
    assert cohens_d([2.0, 2.0], [2.0, 2.0]) == 0.0


def test_cohens_d_hand_value():
    assert cohens_d([2.0, 4.0, 6.0], [1.0, 3.0, 5.0]) == pytest.approx(0.5, abs=1e-15)


def test_cohens_d_needs_two_values():
    with pytest.raises(ValueError):
        cohens_d([1.0], [1.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=10),
    st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=10),
)
def test_cohens_d_antisymmetric(a, b):
    assert cohens_d(a, b) == -cohens_d(b, a)


def test_marks():
    assert mark(0.0) == "≈"
    assert mark(0.19) == "≈" and mark(-0.19) == "≈"
    assert mark(-0.2) == "+"  # lower fitness than the reference
    assert mark(0.2) == "-"
    assert mark(math.inf) == "-"


# ── Friedman ranks ─────────────────────────────────────────────────────


def test_always_best_variant():
    table = {f"F{i}": {"A": 1.0, "B": 2.0 + i} for i in range(13)}
    assert friedman_ranks(table)["A"] == 1.0


def test_all_tied():
    table = {f"F{i}": {"A": float(i), "B": float(i)} for i in range(13)}
    assert friedman_ranks(table) == {"A": 1.5, "B": 1.5}


def test_needs_two_variants():
    with pytest.raises(ValueError):
        friedman_ranks({"F1": {"A": 1.0}})


def test_missing_cells_excluded_with_warning():
    table = {"F1": {"A": 1.0, "B": 2.0}, "F2": {"A": 3.0}}
    with pytest.warns(UserWarning, match="F2"):
        ranks = friedman_ranks(table, ["A", "B"])
    assert ranks == {"A": 1.0, "B": 2.0}


REFERENCE_MEANS = {
    "F1": (3.50e11, 1.05e06, 7.05e-14, 7.05e-14),
    "F2": (9.40e03, 6.51e03, 7.32e-06, 7.32e-06),
    "F3": (2.00e01, 1.52e01, 5.61e-03, 5.61e-03),
    "F4": (3.40e14, 6.92e13, 6.05e11, 8.67e10),
    "F5": (4.90e08, 4.01e08, 1.26e08, 1.12e08),
    "F6": (1.10e07, 1.05e06, 1.11e-02, 3.87e05),
    "F7": (7.70e10, 2.68e10, 7.91e04, 1.63e-03),
    "F8": (1.80e14, 3.46e09, 3.51e07, 9.57e05),
    "F9": (9.40e08, 6.13e08, 3.34e08, 1.14e07),
    "F10": (4.80e03, 7.29e03, 3.75e03, 1.10e03),
    "F11": (4.10e01, 2.74e01, 9.00e-01, 6.00e00),
    "F12": (4.90e05, 2.98e05, 1.76e05, 1.82e03),
    "F13": (1.50e07, 3.28e04, 3.76e03, 6.47e02),
}


def test_reference_table_ranking():
    names = ["CC", "SHADE-CC", "PS-CC", "ASMCC"]
    table = {f: dict(zip(names, vals)) for f, vals in REFERENCE_MEANS.items()}
    ranks = friedman_ranks(table, names)
    assert ranks["CC"] == pytest.approx(3.9231, abs=1e-4)
    assert ranks["SHADE-CC"] == pytest.approx(3.0769, abs=1e-4)
    # reference ranks 1.7692 / 1.2308 sit 0.5/13 away from plain mean-value ranking
    assert ranks["PS-CC"] == pytest.approx(1.7692, abs=0.05)
    assert ranks["ASMCC"] == pytest.approx(1.2308, abs=0.05)
    assert ranks["ASMCC"] < ranks["PS-CC"] < ranks["SHADE-CC"] < ranks["CC"]


@settings(max_examples=50, deadline=None)
@given(
    st.integers(2, 5).flatmap(
        lambda v: st.lists(st.lists(st.integers(0, 4), min_size=v, max_size=v), min_size=1, max_size=8)
    )
)
def test_ranks_match_brute_force(rows):
    v = len(rows[0])
    names = [f"V{k}" for k in range(v)]
    table = {f"F{i}": dict(zip(names, map(float, r))) for i, r in enumerate(rows)}
    expected = dict.fromkeys(names, 0.0)
    for r in rows:
        for k in range(v):
            below = sum(1 for x in r if x < r[k])
            equal = sum(1 for x in r if x == r[k])
            expected[names[k]] += below + (equal + 1) / 2.0
    ranks = friedman_ranks(table, names)
    for n in names:
        assert ranks[n] == pytest.approx(expected[n] / len(rows), abs=1e-12)
    assert sum(ranks.values()) == pytest.approx(v * (v + 1) / 2, abs=1e-12)


# ── aggregation and CSV ────────────────────────────────────────────────


def _cells(spec):
    return [
        {"function": f, "variant": v, "seed": k, "final": x}
        for (f, v), xs in spec.items()
        for k, x in enumerate(xs)
    ]


def test_single_cell_aggregation():
    t = aggregate(_cells({("F1", "ASMCC"): [1.0, 2.0, 6.0]}))
    assert len(t.rows) == 1
    row = t.rows[0]
    assert row.mean == 3.0 and row.n == 3
    assert row.std == pytest.approx(np.std([1.0, 2.0, 6.0], ddof=1))


def test_identical_variants_tie():
    t = aggregate(_cells({("F1", "ASMCC"): [1.0, 2.0], ("F1", "PS-CC"): [1.0, 2.0]}))
    row = t.row("F1", "PS-CC")
    assert row.d == 0.0 and row.mark == "≈"
    assert row.rank == 1.5 and t.row("F1", "ASMCC").rank == 1.5


def test_failed_cells_excluded():
    cells = _cells({("F1", "ASMCC"): [1.0, 3.0]}) + [{"function": "F1", "variant": "ASMCC", "seed": 9, "error": "boom"}]
    assert aggregate(cells).rows[0].n == 2


@pytest.mark.filterwarnings("ignore::UserWarning")
@settings(max_examples=30, deadline=None)
@given(
    st.dictionaries(
        st.tuples(st.sampled_from(["F1", "F2", "F10"]), st.sampled_from(["SHADE-CC", "PS-CC", "ASMCC"])),
        st.lists(st.floats(-1e12, 1e12, allow_subnormal=False), min_size=2, max_size=5),
        min_size=1,
    )
)
def test_csv_round_trip(tmp_path_factory, spec):
    t = aggregate(_cells(spec))
    path = tmp_path_factory.mktemp("csv") / "results.csv"
    t.to_csv(path)
    back = ResultTable.from_csv(path)
    assert back.rows == t.rows
    assert back.mean_ranks == t.mean_ranks


# ── experiment config and batteries ───────────────────────────────────


def test_config_json_flat_and_nested():
    flat = ExperimentConfig.from_json({"functions": ["f1"], "variants": ["asmcc"], "runs": 2, "d_s": 40, "q": 5})
    assert flat.algorithm.d_s == 40 and flat.algorithm.q == 5
    assert flat.functions == ["F1"] and flat.variants == ["ASMCC"]
    nested = ExperimentConfig.from_json(json.loads(json.dumps(flat.to_json())))
    assert nested == flat
    assert flat.seeds() == [0, 1]


@pytest.mark.parametrize("bad", [{"runs": 0}, {"budget": 0}, {"variants": ["CC-I"]}, {"nonsense": 1}, {"q": 0}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(bad)


def _small_config(tmp_path, **kw):
    doc = dict(
        functions=["F1", "F9"],
        variants=["SHADE-CC", "ASMCC"],
        runs=2,
        budget=2_500,
        dimension=40,
        group_size=10,
        d_s=20,
        pop_size=20,
        q=4,
        output_dir=str(tmp_path / "out"),
    )
    doc.update(kw)
    return ExperimentConfig.from_json(doc)


def test_run_experiment_writes_outputs(tmp_path):
    cfg = _small_config(tmp_path)
    outcome = run_experiment(cfg)
    out = tmp_path / "out"
    traces = sorted(p.name for p in (out / "traces").glob("*.json"))
    assert traces == sorted(f"{f}_{v}_{s}.json" for f in cfg.functions for v in cfg.variants for s in (0, 1))
    assert not outcome.failures
    assert ResultTable.from_csv(out / "results.csv").rows == outcome.table.rows
    assert report(out).rows == outcome.table.rows


def test_run_experiment_is_deterministic_and_parallel(tmp_path, monkeypatch):
    serial = run_experiment(_small_config(tmp_path / "a"))
    monkeypatch.setenv("CCOPT_THREADS", "2")
    parallel = run_experiment(_small_config(tmp_path / "b", workers=1))
    assert serial.table.rows == parallel.table.rows
    for f in (tmp_path / "a" / "out" / "traces").glob("*.json"):
        assert f.read_text() == (tmp_path / "b" / "out" / "traces" / f.name).read_text()


def test_failed_cell_recorded(tmp_path):
    cfg = _small_config(tmp_path, functions=["F1", "F99"], variants=["ASMCC"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        outcome = run_experiment(cfg)
    assert len(outcome.failures) == 2
    assert any("F99" in str(w.message) for w in caught)
    assert [r.function for r in outcome.table.rows] == ["F1"]
