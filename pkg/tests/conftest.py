"""Shared fixtures: the nominal screening scenario and the expensive artifacts
(seeded dataset, nested-subset fits, full screening sweep) computed once per
session and reused by the unit and acceptance tests."""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest

from identifit import (
    FitConfig,
    NoiseSpec,
    SubsetSpec,
    TimeGrid,
    fit,
    generate,
    sweep_subsets,
)
from identifit.seirs import NOMINAL, SEIRS, SIGMA0_SQ, default_bounds, default_grid

#: the five nested subsets fitted against one shared dataset, largest first
NESTED_SUBSETS = (
    ("S0", "N", "L", "D", "M", "beta0", "a1", "b1"),
    ("N", "L", "D", "M", "beta0", "a1", "b1"),
    ("N", "L", "D", "beta0", "a1", "b1"),
    ("L", "D", "beta0", "a1", "b1"),
    ("L", "beta0", "a1", "b1"),
)

ACCEPTANCE_SEED = 42


def make_subset(active) -> SubsetSpec:
    """Subset with the complement fixed at nominal values."""
    fixed = {n: getattr(NOMINAL, n) for n in SEIRS.param_names if n not in active}
    return SubsetSpec(active=tuple(active), fixed=fixed)


@pytest.fixture(scope="session")
def grid() -> TimeGrid:
    return default_grid()


@pytest.fixture(scope="session")
def weekly_5y_grid() -> TimeGrid:
    """The weekly, five-year, n=260 schedule used by the rank-deficiency gate."""
    return TimeGrid.regular(0.0, 5.0, 52)


@pytest.fixture(scope="session")
def acceptance_data(grid):
    """One seeded synthetic dataset on the default grid, shared by the fits."""
    return generate(
        SEIRS, NOMINAL, grid, NoiseSpec(sigma0=float(np.sqrt(SIGMA0_SQ)), seed=ACCEPTANCE_SEED)
    )


@pytest.fixture(scope="session")
def nested_fits(acceptance_data):
    """FitResults for the five nested subsets on the shared dataset."""
    results = {}
    for active in NESTED_SUBSETS:
        subset = make_subset(active)
        config = FitConfig.for_subset(subset, NOMINAL, default_bounds())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            results[active] = fit(acceptance_data, SEIRS, subset, config)
    return results


def linear_model(names, basis) -> "ModelSystem":
    """Observation model linear in the parameters: z_j = sum_i theta_i * int(phi_i).

    A one-dimensional inert state carries the interface; all structure lives
    in the output rate. The sensitivity matrix is independent of theta and
    the least-squares problem is exactly the linear OLS problem.
    """
    from identifit.models import ModelSystem

    names = tuple(names)
    p = len(names)

    def rate(t, x, th):
        return float(sum(th[i] * basis[i](t) for i in range(p)))

    return ModelSystem(
        state_dim=1,
        param_names=names,
        vector_field=lambda t, x, th: np.zeros(1),
        state_jacobian=lambda t, x, th: np.zeros((1, 1)),
        param_jacobian=lambda t, x, th: np.zeros((1, p)),
        initial_state=lambda th: np.zeros(1),
        initial_state_param_jacobian=lambda th: np.zeros((1, p)),
        output_rate=rate,
        output_rate_state_gradient=lambda t, x, th: np.zeros(1),
        output_rate_param_gradient=lambda t, x, th: np.array(
            [basis[i](t) for i in range(p)]
        ),
    )


@pytest.fixture(scope="session")
def screening_sweep(grid):
    """Reports for every subset with p = 4..8 on the default grid, plus elapsed time."""
    t_start = time.time()
    by_p = {
        j + 3: sweep_subsets(j, NOMINAL, SIGMA0_SQ, grid, n_jobs=2) for j in range(1, 6)
    }
    return by_p, time.time() - t_start
