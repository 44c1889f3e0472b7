"""Adaptive explicit ODE integration with output at requested time points.

A thin driving loop around scipy's DOP853 stepper: grid values are taken
from the stepper's matching-order dense output, the step count is bounded,
and non-finite states abort immediately instead of poisoning downstream
linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import DOP853


class IntegrationError(RuntimeError):
    """Base class for integration failures."""


class StepLimitExceeded(IntegrationError):
    """Step budget exhausted or the stepper stalled (stiffness, bad parameters)."""


class NonFiniteState(IntegrationError):
    """NaN/Inf appeared in the state (solution blow-up)."""


@dataclass(frozen=True)
class TimeGrid:
    """Initial time plus the strictly increasing observation times t_1..t_n."""

    t0: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("grid needs at least one observation time")
        if not np.all(np.diff(pts) > 0.0):
            raise ValueError("observation times must be strictly increasing")
        if pts[0] <= self.t0:
            raise ValueError(f"first observation time {pts[0]} must exceed t0={self.t0}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def regular(cls, t0: float, span: float, per_year: int) -> "TimeGrid":
        """Evenly spaced grid: n = round(span*per_year) points of spacing 1/per_year."""
        n = int(round(span * per_year))
        if n < 1:
            raise ValueError("span*per_year must round to at least one observation")
        return cls(t0=t0, points=t0 + np.arange(1, n + 1) / per_year)

    @property
    def n(self) -> int:
        return self.points.size

    def with_t0(self) -> np.ndarray:
        """All times including t0, shape (n+1,)."""
        return np.concatenate(([self.t0], self.points))


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    max_steps: int = 100_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class Trajectory:
    """States aligned with times; row 0 is the initial condition at t0."""

    times: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def integrate(
    field: Callable[[float, np.ndarray], Sequence[float]],
    y0: Sequence[float],
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
    dim: int | None = None,
) -> Trajectory:
    """Integrate y' = field(t, y) from grid.t0, returning states at every grid point.

    Grid values come from the stepper's dense output, which for DOP853 has
    interpolation order matching the step order, so no accuracy is lost
    relative to forcing step endpoints onto the grid.

    Raises
    ------
    StepLimitExceeded
        config.max_steps accepted steps were taken without reaching the end,
        or the stepper could not find an acceptable step size.
    NonFiniteState
        the state stopped being finite.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim != 1:
        raise ValueError("y0 must be a vector")
    if dim is not None and y0.size != dim:
        raise ValueError(f"y0 has dimension {y0.size}, system declares {dim}")
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("initial state is not finite")

    pts = grid.points
    out = np.empty((pts.size + 1, y0.size))
    out[0] = y0

    def guarded_field(t, y):
        dy = np.asarray(field(t, y), dtype=float)
        # a NaN slipping into the stepper's error estimate stalls its
        # step-size control forever, so abort inside the RHS instead
        if not np.isfinite(dy).all():
            raise NonFiniteState(f"vector field became non-finite at t={t}")
        return dy

    solver = DOP853(
        guarded_field,
        grid.t0,
        y0,
        t_bound=pts[-1],
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
    )

    next_idx = 0  # next grid point awaiting a value
    steps = 0
    while solver.status == "running":
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            if not np.all(np.isfinite(solver.y)):
                raise NonFiniteState(f"state became non-finite at t={solver.t}")
            raise StepLimitExceeded(f"stepper failed at t={solver.t}: {message}")
        if not np.all(np.isfinite(solver.y)):
            raise NonFiniteState(f"state became non-finite at t={solver.t}")
        if steps > config.max_steps:
            raise StepLimitExceeded(
                f"exceeded {config.max_steps} steps at t={solver.t} "
                f"(reached {next_idx}/{pts.size} grid points)"
            )
        if next_idx < pts.size and pts[next_idx] <= solver.t:
            dense = solver.dense_output()
            while next_idx < pts.size and pts[next_idx] <= solver.t:
                out[next_idx + 1] = dense(pts[next_idx])
                next_idx += 1

    if next_idx < pts.size:
        raise StepLimitExceeded(
            f"integration stopped at t={solver.t} before the last grid point"
        )

    if not np.all(np.isfinite(out)):
        raise NonFiniteState("dense output produced non-finite values")

    return Trajectory(times=grid.with_t0(), states=out)
