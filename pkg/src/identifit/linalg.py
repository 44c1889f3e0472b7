"""Identifiability linear algebra: SVD, rank, conditioning, covariance, scores.

Every inverse in this module goes through the SVD; condition numbers of the
screening problems reach 1e10 and beyond, where forming and inverting normal
equations loses the small singular values entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = float(np.finfo(float).eps)


class RankDeficient(ValueError):
    """Smallest singular value is below the rank tolerance."""


class ConvergenceFailure(RuntimeError):
    """The iterative SVD did not converge."""


class NegativeDiagonal(ValueError):
    """Covariance diagonal went negative (numerical PSD violation)."""


class ZeroParameterValue(ValueError):
    """Coefficient of variation is undefined for a zero parameter value."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD  A = left @ diag(singular_values) @ right.T."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def n(self) -> int:
        return self.left.shape[0]

    @property
    def p(self) -> int:
        return self.right.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


def svd(matrix) -> SvdResult:
    """Thin SVD of an n x p matrix with n >= p."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a matrix")
    n, p = a.shape
    if n < p:
        raise ValueError(f"need at least as many rows as columns (n={n}, p={p})")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as err:
        raise ConvergenceFailure(str(err)) from err
    return SvdResult(left=u, singular_values=s, right=vh.T)


def rank_tolerance(singular_values, n: int, p: int) -> float:
    """Default threshold: s_1 * max(n, p) * machine epsilon."""
    s = np.asarray(singular_values, dtype=float)
    return float(s[0]) * max(n, p) * _EPS if s.size else 0.0


def numerical_rank(singular_values, n: int, p: int, tol: float | None = None) -> int:
    """Number of singular values above the tolerance (0 for a zero matrix)."""
    s = np.asarray(singular_values, dtype=float)
    if s.size and np.any(np.diff(s) > 0):
        raise ValueError("singular values must be sorted descending")
    if tol is None:
        tol = rank_tolerance(s, n, p)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol))


def condition_number(singular_values, n: int | None = None) -> float:
    """s_1 / s_p for a full-rank spectrum.

    ``n`` is the row count used in the rank tolerance; it defaults to the
    number of singular values (square-case tolerance).
    """
    s = np.asarray(singular_values, dtype=float)
    p = s.size
    if numerical_rank(s, n if n is not None else p, p) < p:
        raise RankDeficient("condition number undefined: spectrum is rank deficient")
    return float(s[0] / s[-1])


def fisher(chi) -> np.ndarray:
    """Information matrix chi.T @ chi (symmetric PSD)."""
    a = np.asarray(chi, dtype=float)
    return a.T @ a


def covariance(sigma_sq: float, chi) -> np.ndarray:
    """sigma_sq * (chi.T chi)^{-1} via the SVD of chi, symmetrized."""
    if sigma_sq < 0:
        raise ValueError("sigma_sq must be nonnegative")
    res = svd(chi)
    s = res.singular_values
    if numerical_rank(s, res.n, res.p) < res.p:
        raise RankDeficient("covariance undefined: sensitivity matrix is rank deficient")
    cov = (res.right * (1.0 / s**2)) @ res.right.T
    cov *= sigma_sq
    return 0.5 * (cov + cov.T)


def standard_errors(cov) -> np.ndarray:
    """Square roots of the covariance diagonal."""
    d = np.diag(np.asarray(cov, dtype=float))
    if np.any(d < 0):
        raise NegativeDiagonal(f"negative covariance diagonal: min {d.min():.3e}")
    return np.sqrt(d)


@dataclass(frozen=True)
class UncertaintyScore:
    """Coefficients of variation and their Euclidean norm (the selection score)."""

    cv: np.ndarray
    score: float


def uncertainty_score(theta_values, cov) -> UncertaintyScore:
    """CV_i = sqrt(cov_ii) / theta_i (keeping theta's sign), score = |CV|_2."""
    theta = np.asarray(theta_values, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (theta.size, theta.size):
        raise ValueError("covariance shape does not match parameter count")
    if np.any(theta == 0.0):
        raise ZeroParameterValue("coefficient of variation undefined for zero values")
    cv = standard_errors(cov) / theta
    return UncertaintyScore(cv=cv, score=float(np.linalg.norm(cv)))
