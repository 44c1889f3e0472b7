"""Combinatorial screening: enumeration counts and ordering, the rank filter
and score ranking on a designed toy model, threshold cuts, CSV output, and
the sweep properties on the shipped model."""

import csv
import math

import numpy as np
import pytest

from conftest import linear_model, make_subset
from identifit.ode import IntegratorConfig, TimeGrid
from identifit.seirs import NOMINAL, SEIRS, SIGMA0_SQ
from identifit.subsets import (
    CORE,
    POOL,
    InvalidSubsetSize,
    SubsetReport,
    SubsetSpec,
    core_subset,
    enumerate_subsets,
    evaluate_subset,
    feasibility_cut,
    full_rank_filter,
    full_vector_subset,
    score_subsets,
    sweep_subsets,
    write_report_csv,
    write_scatter_csv,
)

# --- a designed toy search space: informative, redundant, and dead directions

TOY_CORE = ("c1",)
TOY_POOL = ("good", "alias", "dead", "fine")
TOY_NAMES = TOY_CORE + TOY_POOL
TOY_NOMINAL = {"c1": 1.0, "good": 2.0, "alias": -1.0, "dead": 3.0, "fine": 0.5}

_BASLIB = {
    "c1": lambda t: 1.0,
    "good": lambda t: t,
    "alias": lambda t: 1.0 + t,      # dependent on span{c1, good}
    "dead": lambda t: 0.0,           # no effect at all
    "fine": lambda t: np.sin(7.0 * t),
}


def toy_model():
    return linear_model(TOY_NAMES, [_BASLIB[n] for n in TOY_NAMES])


TOY_GRID = TimeGrid(t0=0.0, points=np.linspace(0.25, 3.0, 12))
FAST = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


def test_enumeration_counts():
    for j in range(1, 8):
        assert len(enumerate_subsets(j, NOMINAL)) == math.comb(8, j)
    total = sum(len(enumerate_subsets(j, NOMINAL)) for j in range(1, 8))
    assert total == 2**8 - 2  # 254 candidates across all sizes


def test_enumeration_canonical_order_and_fixed_values():
    subsets = enumerate_subsets(2, NOMINAL)
    first = subsets[0]
    assert first.active == ("S0", "E0") + CORE
    assert set(first.fixed) == set(POOL) - {"S0", "E0"}
    assert first.fixed["L"] == NOMINAL.L
    # deterministic order: combinations follow pool order
    labels = [s.active for s in subsets]
    assert labels == sorted(labels, key=lambda a: [POOL.index(n) for n in a[:-3]])


def test_enumeration_size_bounds():
    with pytest.raises(InvalidSubsetSize):
        enumerate_subsets(0, NOMINAL)
    with pytest.raises(InvalidSubsetSize):
        enumerate_subsets(9, NOMINAL)
    # j = len(pool) is the everything-active case and is allowed
    all_active = enumerate_subsets(8, NOMINAL)
    assert len(all_active) == 1
    assert all_active[0].active == POOL + CORE
    assert all_active[0].fixed == {}


def test_subset_spec_validation():
    with pytest.raises(ValueError):
        SubsetSpec(active=("a", "a"), fixed={})
    with pytest.raises(ValueError):
        SubsetSpec(active=("a",), fixed={"a": 1.0})


def test_full_theta_composition():
    sub = SubsetSpec(active=("b", "d"), fixed={"a": 1.0, "c": 3.0})
    theta = sub.full_theta([20.0, 40.0], ("a", "b", "c", "d"))
    assert np.array_equal(theta, [1.0, 20.0, 3.0, 40.0])
    with pytest.raises(ValueError):
        sub.full_theta([20.0, 40.0], ("a", "b", "c", "d", "e"))
    with pytest.raises(ValueError):
        sub.full_theta([20.0], ("a", "b", "c", "d"))


def test_core_and_full_vector_helpers():
    core = core_subset(NOMINAL)
    assert core.active == CORE
    assert set(core.fixed) == set(POOL)
    full = full_vector_subset(SEIRS.param_names)
    assert full.active == SEIRS.param_names
    assert full.fixed == {}


def test_rank_filter_on_designed_model():
    model = toy_model()
    candidates = [
        SubsetSpec(active=("good", "fine") + TOY_CORE,
                   fixed={"alias": -1.0, "dead": 3.0}),
        SubsetSpec(active=("good", "alias") + TOY_CORE,    # exact dependence
                   fixed={"fine": 0.5, "dead": 3.0}),
        SubsetSpec(active=("dead",) + TOY_CORE,            # zero column
                   fixed={"good": 2.0, "alias": -1.0, "fine": 0.5}),
    ]
    kept = full_rank_filter(candidates, TOY_NOMINAL, TOY_GRID, FAST, model=model)
    assert kept == [candidates[0]]


def test_score_subsets_sorting_and_failures_last():
    model = toy_model()
    subsets = enumerate_subsets(2, TOY_NOMINAL, core=TOY_CORE, pool=TOY_POOL)
    reports = score_subsets(subsets, TOY_NOMINAL, 1.0, TOY_GRID, FAST, model=model)
    assert len(reports) == math.comb(4, 2)
    ok = [r for r in reports if r.rank_ok]
    bad = [r for r in reports if not r.rank_ok]
    # every subset containing 'dead' or the {alias} redundancy fails
    assert all("dead" not in r.subset.active and
               not {"good", "alias"} <= set(r.subset.active) for r in ok)
    assert reports[: len(ok)] == ok  # failures sorted to the end
    scores = [r.score for r in ok]
    assert scores == sorted(scores)
    for r in bad:
        assert r.kappa is None and r.score is None and r.failure is not None


def test_sweep_is_deterministic_and_parallel_invariant():
    model = toy_model()
    a = sweep_subsets(1, TOY_NOMINAL, 1.0, TOY_GRID, FAST, model=model,
                      core=TOY_CORE, pool=TOY_POOL, n_jobs=1)
    b = sweep_subsets(1, TOY_NOMINAL, 1.0, TOY_GRID, FAST, model=model,
                      core=TOY_CORE, pool=TOY_POOL, n_jobs=1)
    assert [r.subset.active for r in a] == [r.subset.active for r in b]
    for ra, rb in zip(a, b):
        assert ra.rank_ok == rb.rank_ok
        if ra.rank_ok:
            assert ra.kappa == rb.kappa and ra.score == rb.score


def test_monotone_rank_deficiency_on_designed_model():
    model = toy_model()
    verdicts = {}
    for j in range(1, 5):
        for sub in enumerate_subsets(j, TOY_NOMINAL, core=TOY_CORE, pool=TOY_POOL):
            rep = evaluate_subset(sub, TOY_NOMINAL, 1.0, TOY_GRID, FAST, model)
            verdicts[frozenset(sub.active)] = rep.rank_ok
    deficient = [s for s, ok in verdicts.items() if not ok]
    assert deficient, "designed model must produce deficient subsets"
    for small in deficient:
        for big, ok in verdicts.items():
            if small < big:
                assert not ok, f"superset {sorted(big)} of deficient {sorted(small)} passed"


def test_feasibility_cut_identity_empty_and_thresholds():
    reports = [
        SubsetReport(subset=SubsetSpec(active=("a",), fixed={}), p=1,
                     rank_ok=True, kappa=10.0, score=0.5, cv=np.array([0.5])),
        SubsetReport(subset=SubsetSpec(active=("b",), fixed={}), p=1,
                     rank_ok=True, kappa=1e12, score=2.0, cv=np.array([2.0])),
    ]
    assert feasibility_cut(reports, np.inf, np.inf) == reports
    assert feasibility_cut(reports, 1e-12, 1e-12) == []
    assert feasibility_cut(reports, 1e11, 1.0) == reports[:1]
    with pytest.raises(ValueError):
        feasibility_cut(reports, 0.0, 1.0)


def test_report_invariant_enforced():
    sub = SubsetSpec(active=("a",), fixed={})
    with pytest.raises(ValueError):
        SubsetReport(subset=sub, p=1, rank_ok=True, kappa=None, score=None)
    with pytest.raises(ValueError):
        SubsetReport(subset=sub, p=1, rank_ok=False, kappa=3.0, score=1.0)


def test_csv_outputs_round_trip(tmp_path):
    model = toy_model()
    reports = sweep_subsets(1, TOY_NOMINAL, 1.0, TOY_GRID, FAST, model=model,
                            core=TOY_CORE, pool=TOY_POOL)
    report_path = tmp_path / "subsets_p2.csv"
    scatter_path = tmp_path / "scatter_p2.csv"
    write_report_csv(reports, report_path)
    write_scatter_csv(reports, scatter_path)

    with report_path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:5] == ["subset", "p", "rank_ok", "kappa", "alpha"]
    assert len(rows) == len(reports) + 1
    for row, rep in zip(rows[1:], reports):
        assert row[0] == rep.subset.label
        assert int(row[1]) == rep.p
        if rep.rank_ok:
            assert float(row[3]) == rep.kappa  # repr round-trips exactly
            assert float(row[4]) == rep.score
            for text, val in zip(row[5:], rep.cv):
                assert float(text) == val
        else:
            assert row[3] == "" and row[4] == ""

    with scatter_path.open(newline="") as fh:
        srows = list(csv.reader(fh))
    assert srows[0] == ["kappa", "alpha"]
    assert len(srows) == 1 + sum(r.rank_ok for r in reports)


# --- properties of the shipped-model sweep (shared session fixture)

def test_transmission_core_passes_rank_filter(grid):
    kept = full_rank_filter([core_subset(NOMINAL)], NOMINAL, grid)
    assert len(kept) == 1
    assert kept[0].active == CORE


def test_default_cut_keeps_the_population_immunity_infection_subset(screening_sweep):
    by_p, _ = screening_sweep
    feasible = feasibility_cut(by_p[6], kappa_max=1e11, alpha_max=1.0)
    labels = {r.subset.active for r in feasible}
    assert ("N", "L", "D", "beta0", "a1", "b1") in labels


def test_sweep_reports_cover_enumeration(screening_sweep):
    by_p, _ = screening_sweep
    for p, reports in by_p.items():
        assert len(reports) == math.comb(8, p - 3)
        assert all(r.p == p for r in reports)


def test_rank_filter_members_recompute_full_rank(screening_sweep):
    by_p, _ = screening_sweep
    reports = by_p[4]
    enumerated = {s.active for s in enumerate_subsets(1, NOMINAL)}
    survivors = [r.subset for r in reports if r.rank_ok]
    assert {s.active for s in survivors} <= enumerated
    # independent recomputation through the public filter
    recomputed = full_rank_filter(survivors[:3], NOMINAL, TimeGrid.regular(0.0, 2.5, 12))
    assert [s.active for s in recomputed] == [s.active for s in survivors[:3]]


def test_scored_reports_have_finite_kappa_and_positive_score(screening_sweep):
    by_p, _ = screening_sweep
    for reports in by_p.values():
        for r in reports:
            if r.rank_ok:
                assert np.isfinite(r.kappa) and r.kappa >= 1.0
                assert r.score > 0.0
                assert np.isclose(r.score, np.linalg.norm(r.cv), rtol=1e-12)


def test_sigma_scaling_doubles_scores_preserves_ranking(grid):
    base = sweep_subsets(1, NOMINAL, SIGMA0_SQ, grid)
    scaled = sweep_subsets(1, NOMINAL, 4.0 * SIGMA0_SQ, grid)
    assert [r.subset.active for r in base] == [r.subset.active for r in scaled]
    for rb, rs in zip(base, scaled):
        if rb.rank_ok:
            assert np.isclose(rs.score, 2.0 * rb.score, rtol=1e-12)
            assert np.isclose(rs.kappa, rb.kappa, rtol=1e-12)
