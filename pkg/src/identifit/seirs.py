"""Seasonal SEIRS model with demography, in the generic model interface.

Compartments (S, E, I, R) in people, time in years. Transmission is
sinusoidally forced with period one year; births balance deaths so the
population N stays constant; immunity wanes back to susceptibility. The
observation rate is E/M, the flow from latency into active infection, so
per-interval observation increments count new active cases.

The eleven parameters, in their fixed order, are the three initial
compartments (S0, E0, I0), the population N, mean immunity duration L,
mean infectious period D, mean latency M, mean lifespan P, baseline
transmission beta0, and the seasonal coefficients a1, b1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import ModelSystem, ParameterSet
from .ode import IntegratorConfig, TimeGrid

_TWO_PI = 2.0 * math.pi

PARAM_NAMES = ("S0", "E0", "I0", "N", "L", "D", "M", "P", "beta0", "a1", "b1")
PARAM_UNITS = (
    "people", "people", "people", "people",
    "years", "years", "years", "years",
    "1/years", "1", "1",
)

# indices into the parameter vector
_S0, _E0, _I0, _N, _L, _D, _M, _P, _B0, _A1, _B1 = range(11)


@dataclass(frozen=True)
class SeirsParameters:
    """Full parameter vector, field order matching PARAM_NAMES."""

    S0: float
    E0: float
    I0: float
    N: float
    L: float
    D: float
    M: float
    P: float
    beta0: float
    a1: float
    b1: float

    def __post_init__(self):
        if self.N <= 0:
            raise ValueError("N must be positive")
        for name in ("L", "D", "M", "P"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.beta0 <= 0:
            raise ValueError("beta0 must be positive")
        if self.S0 + self.E0 + self.I0 > self.N:
            raise ValueError("S0 + E0 + I0 must not exceed N (initial R would be negative)")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES])

    @classmethod
    def from_array(cls, theta) -> "SeirsParameters":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (11,):
            raise ValueError("expected 11 parameter values")
        return cls(*theta)

    def to_parameter_set(self) -> ParameterSet:
        return ParameterSet(names=PARAM_NAMES, values=self.to_array(), units=PARAM_UNITS)


#: nominal values used throughout the screening examples
NOMINAL = SeirsParameters(
    S0=2.78e5,
    E0=1.08e-1,
    I0=1.89e-1,
    N=1.00e6,
    L=5.00,
    D=9.59e-3,
    M=5.48e-3,
    P=75.00,
    beta0=375.00,
    a1=2.00e-2,
    b1=-2.00e-2,
)

#: nominal observation-error variance (people^2 per observation)
SIGMA0_SQ = 500.0


def default_grid() -> TimeGrid:
    """Monthly observations over 2.5 years: t0 = 0, n = 30.

    This window spans two to three epidemic seasons. It keeps the
    transmission-parameter core well determined while leaving the
    demographic parameters poorly determined enough that the screening
    examples show the full contrast between good and hopeless subsets;
    longer or denser default windows wash that contrast out. The grid is
    configurable everywhere it is consumed.
    """
    return TimeGrid.regular(0.0, 2.5, 12)


@dataclass(frozen=True)
class NominalScenario:
    params: SeirsParameters
    sigma0_sq: float
    grid: TimeGrid

    def __post_init__(self):
        if self.sigma0_sq <= 0:
            raise ValueError("sigma0_sq must be positive")


def nominal_scenario() -> NominalScenario:
    return NominalScenario(params=NOMINAL, sigma0_sq=SIGMA0_SQ, grid=default_grid())


def beta_at(t, beta0, a1, b1):
    """Transmission rate beta0*(1 + a1*cos(2*pi*t) + b1*sin(2*pi*t)); accepts array t."""
    w = _TWO_PI * np.asarray(t, dtype=float)
    return beta0 * (1.0 + a1 * np.cos(w) + b1 * np.sin(w))


def beta_amplitude_phase(t, beta0, beta1, phase):
    """Equivalent amplitude/phase form beta0*(1 + beta1*cos(2*pi*(t - phase)))."""
    return beta0 * (1.0 + beta1 * np.cos(_TWO_PI * (np.asarray(t, dtype=float) - phase)))


def fourier_coefficients(beta1: float, phase: float) -> tuple[float, float]:
    """(a1, b1) reproducing the amplitude/phase form of the seasonal forcing."""
    return beta1 * math.cos(_TWO_PI * phase), beta1 * math.sin(_TWO_PI * phase)


def _coerce_theta(params) -> np.ndarray:
    if isinstance(params, SeirsParameters):
        return params.to_array()
    if isinstance(params, ParameterSet):
        if params.names != PARAM_NAMES:
            raise ValueError("parameter set names do not match the SEIRS model")
        return np.asarray(params.values, dtype=float)
    theta = np.asarray(params, dtype=float)
    if theta.shape != (11,):
        raise ValueError("expected 11 parameter values")
    return theta


def _rhs(t, x, th):
    S, E, I, R = x
    N = th[_N]
    inv_L = 1.0 / th[_L]
    inv_D = 1.0 / th[_D]
    inv_M = 1.0 / th[_M]
    inv_P = 1.0 / th[_P]
    w = _TWO_PI * t
    beta = th[_B0] * (1.0 + th[_A1] * math.cos(w) + th[_B1] * math.sin(w))
    foi = beta * S * I / N
    return np.array([
        N * inv_P + R * inv_L - foi - S * inv_P,
        foi - E * inv_M - E * inv_P,
        E * inv_M - I * inv_D - I * inv_P,
        I * inv_D - R * inv_L - R * inv_P,
    ])


def _state_jacobian(t, x, th):
    S, E, I, R = x
    N = th[_N]
    inv_L = 1.0 / th[_L]
    inv_D = 1.0 / th[_D]
    inv_M = 1.0 / th[_M]
    inv_P = 1.0 / th[_P]
    w = _TWO_PI * t
    beta = th[_B0] * (1.0 + th[_A1] * math.cos(w) + th[_B1] * math.sin(w))
    phi = beta / N
    return np.array([
        [-phi * I - inv_P, 0.0, -phi * S, inv_L],
        [phi * I, -inv_M - inv_P, phi * S, 0.0],
        [0.0, inv_M, -inv_D - inv_P, 0.0],
        [0.0, 0.0, inv_D, -inv_L - inv_P],
    ])


def _param_jacobian(t, x, th):
    S, E, I, R = x
    N = th[_N]
    L = th[_L]
    D = th[_D]
    M = th[_M]
    P = th[_P]
    w = _TWO_PI * t
    c = math.cos(w)
    s = math.sin(w)
    seasonal = 1.0 + th[_A1] * c + th[_B1] * s
    beta = th[_B0] * seasonal
    SIoverN = S * I / N

    out = np.zeros((4, 11))
    # initial-condition parameters never appear in the flow itself
    out[0, _N] = 1.0 / P + beta * SIoverN / N
    out[1, _N] = -beta * SIoverN / N
    out[0, _L] = -R / L**2
    out[3, _L] = R / L**2
    out[2, _D] = I / D**2
    out[3, _D] = -I / D**2
    out[1, _M] = E / M**2
    out[2, _M] = -E / M**2
    out[0, _P] = (S - N) / P**2
    out[1, _P] = E / P**2
    out[2, _P] = I / P**2
    out[3, _P] = R / P**2
    out[0, _B0] = -seasonal * SIoverN
    out[1, _B0] = seasonal * SIoverN
    out[0, _A1] = -th[_B0] * c * SIoverN
    out[1, _A1] = th[_B0] * c * SIoverN
    out[0, _B1] = -th[_B0] * s * SIoverN
    out[1, _B1] = th[_B0] * s * SIoverN
    return out


def _initial_state(th):
    return np.array([th[_S0], th[_E0], th[_I0], th[_N] - th[_S0] - th[_E0] - th[_I0]])


def _initial_state_param_jacobian(th):
    out = np.zeros((4, 11))
    out[0, _S0] = 1.0
    out[1, _E0] = 1.0
    out[2, _I0] = 1.0
    # R(t0) = N - S0 - E0 - I0
    out[3, _S0] = -1.0
    out[3, _E0] = -1.0
    out[3, _I0] = -1.0
    out[3, _N] = 1.0
    return out


def _output_rate(t, x, th):
    return x[1] / th[_M]


def _output_rate_state_gradient(t, x, th):
    return np.array([0.0, 1.0 / th[_M], 0.0, 0.0])


def _output_rate_param_gradient(t, x, th):
    out = np.zeros(11)
    out[_M] = -x[1] / th[_M] ** 2
    return out


SEIRS = ModelSystem(
    state_dim=4,
    param_names=PARAM_NAMES,
    vector_field=_rhs,
    state_jacobian=_state_jacobian,
    param_jacobian=_param_jacobian,
    initial_state=_initial_state,
    initial_state_param_jacobian=_initial_state_param_jacobian,
    output_rate=_output_rate,
    output_rate_state_gradient=_output_rate_state_gradient,
    output_rate_param_gradient=_output_rate_param_gradient,
)


def seirs_vector_field(t, x, params) -> np.ndarray:
    """Time derivative of (S, E, I, R) in people/year."""
    return _rhs(t, np.asarray(x, dtype=float), _coerce_theta(params))


def seirs_jacobians(t, x, params) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (d field/d state, d field/d params), shapes (4, 4) and (4, 11)."""
    x = np.asarray(x, dtype=float)
    th = _coerce_theta(params)
    return _state_jacobian(t, x, th), _param_jacobian(t, x, th)


def default_config() -> IntegratorConfig:
    return IntegratorConfig()


def default_bounds(names=PARAM_NAMES) -> dict[str, tuple[float, float]]:
    """Box bounds for fitting: positive-by-meaning parameters in (0, inf),
    seasonal coefficients in (-1, 1)."""
    out = {}
    for name in names:
        out[name] = (-1.0, 1.0) if name in ("a1", "b1") else (0.0, np.inf)
    return out
