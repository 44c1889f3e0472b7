"""Integrator contract: accuracy against analytic solutions, refinement
self-consistency, determinism, and failure modes."""

import numpy as np
import pytest

from identifit.ode import (
    IntegrationError,
    IntegratorConfig,
    NonFiniteState,
    StepLimitExceeded,
    TimeGrid,
    integrate,
)


def test_exponential_decay_hits_analytic_value():
    grid = TimeGrid(t0=0.0, points=np.array([1.0]))
    traj = integrate(lambda t, y: -y, [1.0], grid)
    assert abs(traj.states[-1, 0] - np.exp(-1.0)) < 1e-8


def test_zero_field_is_exactly_constant():
    grid = TimeGrid(t0=0.0, points=np.linspace(0.3, 4.0, 9))
    traj = integrate(lambda t, y: np.zeros(3), [2.0, -1.0, 0.5], grid)
    assert np.array_equal(traj.states, np.tile([2.0, -1.0, 0.5], (10, 1)))


def test_harmonic_oscillator_returns_after_one_period():
    # y'' = -(2 pi)^2 y has period exactly 1
    w = 2.0 * np.pi

    def field(t, y):
        return np.array([y[1], -(w**2) * y[0]])

    grid = TimeGrid(t0=0.0, points=np.array([0.25, 0.5, 1.0]))
    y0 = np.array([1.0, 0.0])
    traj = integrate(field, y0, grid, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
    final = traj.states[-1]
    assert np.linalg.norm(final - y0) / np.linalg.norm([1.0, w]) < 1e-6


def test_refinement_self_consistency():
    w = 2.0 * np.pi

    def field(t, y):
        return np.array([y[1], -(w**2) * y[0]])

    grid = TimeGrid(t0=0.0, points=np.array([1.0]))
    coarse = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)
    fine = IntegratorConfig(rel_tol=0.5e-8, abs_tol=0.5e-10)
    a = integrate(field, [1.0, 0.0], grid, coarse).states[-1]
    b = integrate(field, [1.0, 0.0], grid, fine).states[-1]
    # compare at the solution scale; single components pass through zero
    assert np.linalg.norm(a - b) < coarse.rel_tol * (1.0 + np.linalg.norm(a))


def test_integration_is_bit_deterministic():
    def field(t, y):
        return np.array([np.sin(t) * y[0] - y[1], y[0] * y[1] * 1e-2])

    grid = TimeGrid(t0=0.0, points=np.linspace(0.1, 3.0, 30))
    a = integrate(field, [1.0, 0.2], grid)
    b = integrate(field, [1.0, 0.2], grid)
    assert np.array_equal(a.states, b.states)


def test_step_limit_exceeded():
    grid = TimeGrid(t0=0.0, points=np.array([100.0]))
    with pytest.raises(StepLimitExceeded):
        integrate(lambda t, y: -y, [1.0], grid, IntegratorConfig(max_steps=3))


def test_blow_up_aborts_instead_of_hanging():
    grid = TimeGrid(t0=0.0, points=np.array([10.0]))

    def blow_up(t, y):
        with np.errstate(over="ignore"):
            return y**3

    # finite-time blow-up at t = 1/50; the stepper must abort, not spin
    with pytest.raises(IntegrationError):
        integrate(blow_up, [5.0], grid, IntegratorConfig(max_steps=10_000))


def test_non_finite_field_value_detected():
    grid = TimeGrid(t0=0.0, points=np.array([2.0]))

    def field(t, y):
        return np.array([0.0 if t < 0.5 else np.inf])

    with pytest.raises(NonFiniteState):
        integrate(field, [1.0], grid)


def test_nan_field_raises_non_finite():
    grid = TimeGrid(t0=0.0, points=np.array([1.0]))
    with pytest.raises(NonFiniteState):
        integrate(lambda t, y: np.array([np.nan]), [1.0], grid)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(t0=0.0, points=np.array([]))
    with pytest.raises(ValueError):
        TimeGrid(t0=0.0, points=np.array([0.2, 0.2]))
    with pytest.raises(ValueError):
        TimeGrid(t0=0.5, points=np.array([0.4]))
    grid = TimeGrid.regular(0.0, 2.5, 12)
    assert grid.n == 30
    assert grid.points[0] > 0.0
    assert np.isclose(grid.points[-1], 2.5)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=-1e-10)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_dimension_mismatch_rejected():
    grid = TimeGrid(t0=0.0, points=np.array([1.0]))
    with pytest.raises(ValueError):
        integrate(lambda t, y: -y, [1.0, 2.0], grid, dim=3)
