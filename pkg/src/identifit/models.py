"""Generic parametric ODE model interface and observation machinery.

A model is a vector field with analytic Jacobians, a parameter-dependent
initial state, and a scalar output rate whose running integral defines the
observations: the j-th observation is the increment of the cumulative
output between consecutive grid times. Everything downstream (sensitivity
assembly, subset screening, least-squares fitting) only touches this
interface, so swapping in another disease model or an unrelated ODE system
requires no changes elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .ode import IntegratorConfig, TimeGrid, Trajectory, integrate

Field = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
Scalar = Callable[[float, np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class ParameterSet:
    """Named, ordered parameter vector with optional units."""

    names: tuple[str, ...]
    values: np.ndarray
    units: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.names),):
            raise ValueError("values length must match names")
        if len(set(self.names)) != len(self.names):
            raise ValueError("parameter names must be unique")
        if self.units is not None and len(self.units) != len(self.names):
            raise ValueError("units length must match names")
        object.__setattr__(self, "values", values)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def value(self, name: str) -> float:
        return float(self.values[self.index(name)])

    def replace_values(self, updates: Mapping[str, float]) -> "ParameterSet":
        values = self.values.copy()
        for name, val in updates.items():
            values[self.index(name)] = val
        return replace(self, values=values)

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self.names, self.values)}


@dataclass(frozen=True)
class ModelSystem:
    """Parametric ODE system with analytic derivatives and a scalar output rate.

    All callables take the full parameter vector ordered as ``param_names``.
    ``state_jacobian`` is d(field)/d(state), shape (state_dim, state_dim);
    ``param_jacobian`` is d(field)/d(params), shape (state_dim, p).
    ``initial_state_param_jacobian`` carries the parameter dependence of the
    initial condition (e.g. initial-compartment parameters), shape
    (state_dim, p). The observation between grid times is the integral of
    ``output_rate``, whose state/parameter gradients feed the sensitivity
    system.
    """

    state_dim: int
    param_names: tuple[str, ...]
    vector_field: Field
    state_jacobian: Field
    param_jacobian: Field
    initial_state: Callable[[np.ndarray], np.ndarray]
    initial_state_param_jacobian: Callable[[np.ndarray], np.ndarray]
    output_rate: Scalar
    output_rate_state_gradient: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    output_rate_param_gradient: Callable[[float, np.ndarray, np.ndarray], np.ndarray]

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def param_indices(self, names: Sequence[str]) -> np.ndarray:
        lookup = {name: i for i, name in enumerate(self.param_names)}
        try:
            return np.array([lookup[name] for name in names], dtype=int)
        except KeyError as err:
            raise KeyError(f"unknown parameter {err.args[0]!r}") from None

    def full_theta(self, params) -> np.ndarray:
        """Coerce a ParameterSet / mapping / array into the ordered vector."""
        if isinstance(params, ParameterSet):
            if params.names != self.param_names:
                raise ValueError("parameter set names do not match the model")
            return params.values.copy()
        if isinstance(params, Mapping):
            missing = [n for n in self.param_names if n not in params]
            if missing:
                raise KeyError(f"missing parameter {missing[0]!r}")
            return np.array([float(params[n]) for n in self.param_names])
        if hasattr(params, "to_array"):
            return np.asarray(params.to_array(), dtype=float)
        theta = np.asarray(params, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameter values")
        return theta


def simulate_with_output(
    model: ModelSystem,
    params,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
) -> tuple[Trajectory, np.ndarray]:
    """Integrate the state jointly with the cumulative output.

    Returns the state trajectory on [t0, t_n] and the observation vector
    z_j = C(t_j) - C(t_{j-1}) where C' = output_rate, C(t0) = 0. Carrying C
    as an extra state keeps the observations at integrator accuracy instead
    of post-hoc quadrature accuracy.
    """
    theta = model.full_theta(params)
    dim = model.state_dim
    rhs_state = model.vector_field
    rate = model.output_rate

    def rhs(t, y):
        x = y[:dim]
        dy = np.empty(dim + 1)
        dy[:dim] = rhs_state(t, x, theta)
        dy[dim] = rate(t, x, theta)
        return dy

    y0 = np.concatenate([model.initial_state(theta), [0.0]])
    traj = integrate(rhs, y0, grid, config)
    cumulative = traj.states[:, dim]
    z = np.diff(cumulative)
    return Trajectory(times=traj.times, states=traj.states[:, :dim]), z


def incidence_series(
    model: ModelSystem,
    params,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """Observation vector z of per-interval new counts (length grid.n)."""
    _, z = simulate_with_output(model, params, grid, config)
    return z


def state_trajectory(
    model: ModelSystem,
    params,
    grid: TimeGrid,
    config: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    traj, _ = simulate_with_output(model, params, grid, config)
    return traj
