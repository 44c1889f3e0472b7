"""Observation sensitivities via the forward sensitivity equations.

The state, the cumulative output, and one sensitivity block per active
parameter are integrated jointly, so a single adaptive step-size control
keeps all columns mutually consistent, which the downstream rank test
needs. A central-finite-difference twin of the same matrix serves as the
independent verification route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import ModelSystem
from .ode import IntegratorConfig, TimeGrid, integrate


class SubsetUnknownName(KeyError):
    """An active-parameter name is not a parameter of the model."""


@dataclass(frozen=True)
class SensitivityMatrix:
    """n x p matrix of d(observation_j)/d(theta_i) with labeled rows and columns."""

    times: np.ndarray
    param_names: tuple[str, ...]
    values: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n, p = values.shape
        if len(self.param_names) != p:
            raise ValueError("param_names length must match the number of columns")
        if n <= p:
            raise ValueError(f"need more observations than parameters (n={n}, p={p})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.param_names.index(name)]
        except ValueError:
            raise SubsetUnknownName(name) from None


def _active_names(subset) -> tuple[str, ...]:
    return tuple(getattr(subset, "active", subset))


def _active_indices(model: ModelSystem, names: Sequence[str]) -> np.ndarray:
    try:
        return model.param_indices(names)
    except KeyError as err:
        raise SubsetUnknownName(err.args[0]) from None


def output_sensitivities(
    model: ModelSystem,
    params,
    subset,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
) -> SensitivityMatrix:
    """Sensitivity matrix of the per-interval observations for the active subset.

    Augments the state with the cumulative output and, per active parameter,
    a state-sensitivity block plus a cumulative-output sensitivity governed by
    the chain rule through the output rate (including that rate's direct
    parameter dependence). Row j is the increment of the cumulative-output
    sensitivity over (t_{j-1}, t_j].
    """
    names = _active_names(subset)
    theta = model.full_theta(params)
    idx = _active_indices(model, names)
    dim = model.state_dim
    p = idx.size
    n_sens = dim * p

    field = model.vector_field
    jac_x = model.state_jacobian
    jac_th = model.param_jacobian
    rate = model.output_rate
    rate_gx = model.output_rate_state_gradient
    rate_gth = model.output_rate_param_gradient

    def rhs(t, y):
        x = y[:dim]
        sens = y[dim + 1 : dim + 1 + n_sens].reshape(dim, p)
        jx = jac_x(t, x, theta)
        dy = np.empty(y.size)
        dy[:dim] = field(t, x, theta)
        dy[dim] = rate(t, x, theta)
        dy[dim + 1 : dim + 1 + n_sens] = (jx @ sens + jac_th(t, x, theta)[:, idx]).ravel()
        dy[dim + 1 + n_sens :] = rate_gx(t, x, theta) @ sens + rate_gth(t, x, theta)[idx]
        return dy

    y0 = np.concatenate([
        model.initial_state(theta),
        [0.0],
        model.initial_state_param_jacobian(theta)[:, idx].ravel(),
        np.zeros(p),
    ])
    traj = integrate(rhs, y0, grid, config)
    cumulative_sens = traj.states[:, dim + 1 + n_sens :]
    chi = np.diff(cumulative_sens, axis=0)
    return SensitivityMatrix(times=grid.points, param_names=names, values=chi, theta=theta)


def finite_difference_sensitivities(
    model: ModelSystem,
    params,
    subset,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
    rel_step: float = 1e-5,
) -> SensitivityMatrix:
    """Central-difference sensitivity matrix; the oracle for output_sensitivities.

    Column i uses step rel_step * max(|theta_i|, 1e-8) on the full observation
    vector. Second-order accurate in the step; integrator noise limits how
    small rel_step can usefully be.
    """
    from .models import incidence_series

    if rel_step <= 0:
        raise ValueError("rel_step must be positive")
    names = _active_names(subset)
    theta = model.full_theta(params)
    idx = _active_indices(model, names)

    cols = []
    for i in idx:
        h = rel_step * max(abs(theta[i]), 1e-8)
        up = theta.copy()
        up[i] += h
        down = theta.copy()
        down[i] -= h
        z_up = incidence_series(model, up, grid, config)
        z_down = incidence_series(model, down, grid, config)
        cols.append((z_up - z_down) / (2.0 * h))
    chi = np.column_stack(cols)
    return SensitivityMatrix(times=grid.points, param_names=names, values=chi, theta=theta)
