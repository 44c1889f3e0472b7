"""Combinatorial subset screening: enumerate, rank-filter, score, cut.

The search fixes a core of always-active parameters (the transmission
parameters for the shipped disease model) and augments it with every
j-combination drawn from the remaining pool. Each candidate is screened in
two stages: its sensitivity matrix must have full numerical rank, and the
survivors are ranked by the selection score (the norm of the nominal
coefficient-of-variation vector). Failures of individual candidates are
captured in their reports; a combinatorial sweep must never die on one
bad subset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from .linalg import condition_number, numerical_rank, svd, uncertainty_score
from .models import ModelSystem, ParameterSet
from .ode import IntegrationError, IntegratorConfig, TimeGrid
from .sensitivity import output_sensitivities


class InvalidSubsetSize(ValueError):
    """Requested combination size is outside 1..len(pool)."""


#: default always-active core and selection pool for the shipped SEIRS model
CORE = ("beta0", "a1", "b1")
POOL = ("S0", "E0", "I0", "N", "L", "D", "M", "P")


@dataclass
class SubsetSpec:
    """Active (estimated) parameter names plus fixed values for the complement."""

    active: tuple[str, ...]
    fixed: dict[str, float]

    def __post_init__(self):
        self.active = tuple(self.active)
        if len(set(self.active)) != len(self.active):
            raise ValueError("active names must be unique")
        overlap = set(self.active) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters both active and fixed: {sorted(overlap)}")

    @property
    def p(self) -> int:
        return len(self.active)

    @property
    def label(self) -> str:
        return "(" + ",".join(self.active) + ")"

    def full_theta(self, active_values, param_names: Sequence[str]) -> np.ndarray:
        """Assemble the full parameter vector ordered as param_names."""
        active_values = np.asarray(active_values, dtype=float)
        if active_values.shape != (self.p,):
            raise ValueError("active_values length must match the active subset")
        by_name = dict(zip(self.active, active_values))
        by_name.update(self.fixed)
        missing = [n for n in param_names if n not in by_name]
        if missing:
            raise ValueError(f"subset does not cover parameter {missing[0]!r}")
        if len(by_name) != len(param_names):
            extra = sorted(set(by_name) - set(param_names))
            raise ValueError(f"subset names not in the model: {extra}")
        return np.array([by_name[n] for n in param_names])


@dataclass
class SubsetReport:
    """Screening outcome for one candidate subset."""

    subset: SubsetSpec
    p: int
    rank_ok: bool
    kappa: float | None = None
    score: float | None = None
    cv: np.ndarray | None = None
    failure: str | None = None

    def __post_init__(self):
        if self.rank_ok and (self.kappa is None or self.score is None):
            raise ValueError("rank_ok reports must carry kappa and score")
        if not self.rank_ok and (self.kappa is not None or self.score is not None):
            raise ValueError("rank-deficient reports must not carry kappa or score")


def _values_by_name(nominal) -> dict[str, float]:
    if isinstance(nominal, ParameterSet):
        return nominal.as_dict()
    if isinstance(nominal, Mapping):
        return {k: float(v) for k, v in nominal.items()}
    if hasattr(nominal, "to_parameter_set"):
        return nominal.to_parameter_set().as_dict()
    raise TypeError("nominal must be a ParameterSet, mapping, or model parameters")


def enumerate_subsets(
    j: int,
    nominal,
    core: Sequence[str] = CORE,
    pool: Sequence[str] = POOL,
) -> list[SubsetSpec]:
    """All C(len(pool), j) subsets of size p = j + len(core).

    Active ordering is canonical: chosen pool members in pool order, then the
    core. The complement is fixed at its nominal value. Enumeration order
    follows itertools.combinations over the pool, so it is deterministic.
    """
    core = tuple(core)
    pool = tuple(pool)
    if not 1 <= j <= len(pool):
        raise InvalidSubsetSize(f"j={j} outside 1..{len(pool)}")
    values = _values_by_name(nominal)
    out = []
    for chosen in combinations(pool, j):
        active = chosen + core
        fixed = {name: values[name] for name in pool if name not in chosen}
        out.append(SubsetSpec(active=active, fixed=fixed))
    assert len(out) == math.comb(len(pool), j)
    return out


def core_subset(nominal, core: Sequence[str] = CORE, pool: Sequence[str] = POOL) -> SubsetSpec:
    """The core-only subset (p = len(core)); everything in the pool is fixed."""
    values = _values_by_name(nominal)
    return SubsetSpec(active=tuple(core), fixed={name: values[name] for name in pool})


def full_vector_subset(param_names: Sequence[str]) -> SubsetSpec:
    """All parameters active; nothing fixed."""
    return SubsetSpec(active=tuple(param_names), fixed={})


def _nominal_theta(subset: SubsetSpec, nominal, model: ModelSystem) -> np.ndarray:
    values = _values_by_name(nominal)
    active_values = [values[name] for name in subset.active]
    return subset.full_theta(active_values, model.param_names)


def _screen(subset, nominal, grid, config, model):
    """Sensitivity SVD for one subset: (svd_result, failure_message)."""
    try:
        theta = _nominal_theta(subset, nominal, model)
        chi = output_sensitivities(model, theta, subset, grid, config)
    except (IntegrationError, KeyError, ValueError) as err:
        return None, f"{type(err).__name__}: {err}"
    res = svd(chi.values)
    if numerical_rank(res.singular_values, res.n, res.p) < subset.p:
        return res, "rank deficient"
    return res, None


def _rank_passes(subset, nominal, grid, config, model) -> bool:
    _, failure = _screen(subset, nominal, grid, config, model)
    return failure is None


def evaluate_subset(
    subset: SubsetSpec,
    nominal,
    sigma0_sq: float,
    grid: TimeGrid,
    config: IntegratorConfig,
    model: ModelSystem,
) -> SubsetReport:
    """Rank-screen and score one subset at nominal values.

    Integration failures and rank deficiencies are recorded in the report
    rather than raised.
    """
    res, failure = _screen(subset, nominal, grid, config, model)
    if failure is not None:
        return SubsetReport(subset=subset, p=subset.p, rank_ok=False, failure=failure)
    s = res.singular_values
    kappa = condition_number(s, n=res.n)
    cov = sigma0_sq * (res.right * (1.0 / s**2)) @ res.right.T
    theta_active = np.array([_values_by_name(nominal)[n] for n in subset.active])
    try:
        unc = uncertainty_score(theta_active, cov)
    except ValueError as err:
        return SubsetReport(
            subset=subset, p=subset.p, rank_ok=False,
            failure=f"{type(err).__name__}: {err}",
        )
    return SubsetReport(
        subset=subset, p=subset.p, rank_ok=True,
        kappa=kappa, score=unc.score, cv=unc.cv,
    )


def _sort_key(report: SubsetReport):
    # ranked reports first (ascending score, then kappa), failures last
    if report.rank_ok:
        return (0, report.score, report.kappa, report.subset.active)
    return (1, 0.0, 0.0, report.subset.active)


def full_rank_filter(
    subsets: Sequence[SubsetSpec],
    nominal,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
    model: ModelSystem | None = None,
    n_jobs: int = 1,
) -> list[SubsetSpec]:
    """Subsets whose sensitivity matrix at nominal values has full numerical rank."""
    model = _default_model(model)
    if n_jobs == 1:
        verdicts = [_rank_passes(s, nominal, grid, config, model) for s in subsets]
    else:
        verdicts = Parallel(n_jobs=n_jobs)(
            delayed(_rank_passes)(s, nominal, grid, config, model) for s in subsets
        )
    return [s for s, ok in zip(subsets, verdicts) if ok]


def score_subsets(
    subsets: Sequence[SubsetSpec],
    nominal,
    sigma0_sq: float,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
    model: ModelSystem | None = None,
    n_jobs: int = 1,
) -> list[SubsetReport]:
    """Score subsets at nominal values and sort ascending by score, then kappa.

    Intended for subsets that already passed the rank filter; any that turn
    out rank deficient here (tolerance races) are reported as failed entries
    at the end of the list rather than raised.
    """
    model = _default_model(model)
    reports = _evaluate_many(subsets, nominal, sigma0_sq, grid, config, model, n_jobs)
    return sorted(reports, key=_sort_key)


def sweep_subsets(
    j: int,
    nominal,
    sigma0_sq: float,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
    model: ModelSystem | None = None,
    core: Sequence[str] = CORE,
    pool: Sequence[str] = POOL,
    n_jobs: int = 1,
) -> list[SubsetReport]:
    """Single-pass enumerate + rank test + score for one subset size."""
    model = _default_model(model)
    subsets = enumerate_subsets(j, nominal, core=core, pool=pool)
    reports = _evaluate_many(subsets, nominal, sigma0_sq, grid, config, model, n_jobs)
    return sorted(reports, key=_sort_key)


def _evaluate_many(subsets, nominal, sigma0_sq, grid, config, model, n_jobs):
    if n_jobs == 1:
        return [evaluate_subset(s, nominal, sigma0_sq, grid, config, model) for s in subsets]
    return Parallel(n_jobs=n_jobs)(
        delayed(evaluate_subset)(s, nominal, sigma0_sq, grid, config, model)
        for s in subsets
    )


def _default_model(model: ModelSystem | None) -> ModelSystem:
    if model is not None:
        return model
    from .seirs import SEIRS

    return SEIRS


def feasibility_cut(
    reports: Sequence[SubsetReport],
    kappa_max: float = 1e11,
    alpha_max: float = 1.0,
) -> list[SubsetReport]:
    """Reports that passed the rank test with kappa <= kappa_max and score <= alpha_max."""
    if kappa_max <= 0 or alpha_max <= 0:
        raise ValueError("feasibility thresholds must be positive")
    return [
        r for r in reports
        if r.rank_ok and r.kappa <= kappa_max and r.score <= alpha_max
    ]


def write_report_csv(reports: Sequence[SubsetReport], path) -> None:
    """Ranked screening table: subset, p, rank_ok, kappa, alpha, cv_1..cv_p."""
    path = Path(path)
    p_max = max((r.p for r in reports), default=0)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["subset", "p", "rank_ok", "kappa", "alpha"]
            + [f"cv_{i + 1}" for i in range(p_max)]
        )
        for r in reports:
            row = [r.subset.label, r.p, str(r.rank_ok).lower()]
            row.append(repr(r.kappa) if r.kappa is not None else "")
            row.append(repr(r.score) if r.score is not None else "")
            cv = list(r.cv) if r.cv is not None else []
            row.extend(repr(float(v)) for v in cv)
            row.extend("" for _ in range(p_max - len(cv)))
            writer.writerow(row)


def write_scatter_csv(reports: Sequence[SubsetReport], path) -> None:
    """(kappa, alpha) pairs of the rank-passing subsets, for external plotting."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kappa", "alpha"])
        for r in reports:
            if r.rank_ok:
                writer.writerow([repr(r.kappa), repr(r.score)])
