"""Finite-p AMSE proxies for the weighted estimator.

The population limits in the asymptotic covariance are replaced by their
finite-p averages: ``Q0 = X'AX/p``, ``Q1 = X'A Sigma A X/p`` and
``tau2 = tr(Sigma A Sigma A)/p``. The AMSE of coordinate j is ``Omega_jj / p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import EivError, InfeasibleDesignError, InputError
from .estimator import omega_formula


@dataclass(frozen=True)
class DiagonalSpec:
    beta1: float
    x: np.ndarray
    sigma_sq: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        s = np.asarray(self.sigma_sq, dtype=float).reshape(-1)
        if x.shape != s.shape:
            raise InputError("x and sigma_sq must have equal length")
        if np.any(s <= 0) or not np.all(np.isfinite(x)):
            raise InputError("need positive sigma_sq and finite x")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "sigma_sq", s)
        if self.weights is not None:
            a = np.asarray(self.weights, dtype=float).reshape(-1)
            if a.shape != x.shape or np.any(a <= 0):
                raise InputError("weights must be positive with the same length as x")
            object.__setattr__(self, "weights", a)

    @property
    def p(self) -> int:
        return self.x.size

    def with_weights(self, a) -> "DiagonalSpec":
        return DiagonalSpec(self.beta1, self.x, self.sigma_sq, a)


def amse_weighted(beta, A, X, Sigma) -> np.ndarray:
    """Finite-p ``Omega*`` for weight ``A``; divide by p for the AMSE matrix."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    A = linalg.as_symmetric(A, "A")
    Sigma = linalg.as_symmetric(Sigma, "Sigma")
    p = X.shape[0]
    ax = A @ X
    q0 = X.T @ ax / p
    sa = Sigma @ A
    q1 = ax.T @ Sigma @ ax / p
    tau2 = float(np.sum(sa * sa.T)) / p
    try:
        return omega_formula(beta, 0.5 * (q0 + q0.T), 0.5 * (q1 + q1.T), tau2)
    except EivError as exc:
        raise InfeasibleDesignError(f"X'AX/p is singular: {exc}") from exc


def _noise_terms(spec: DiagonalSpec) -> np.ndarray:
    s = spec.sigma_sq
    return (1.0 + spec.beta1 ** 2) * spec.x ** 2 * s + s ** 2


def amse_diag(spec: DiagonalSpec) -> float:
    if spec.weights is None:
        raise InputError("amse_diag needs weights")
    a = spec.weights
    den = float(np.sum(a * spec.x ** 2)) ** 2
    if den == 0:
        raise InfeasibleDesignError("sum of a_i x_i^2 is zero")
    return float(np.sum(a ** 2 * _noise_terms(spec))) / den


def amse_diag_optimal(spec: DiagonalSpec) -> float:
    """Closed-form lower bound attained by the optimal diagonal weight."""
    return 1.0 / float(np.sum(spec.x ** 4 / _noise_terms(spec)))


def optimal_diag_weight(spec: DiagonalSpec) -> np.ndarray:
    """``a_i* = x_i^2 / {(1 + b^2) x_i^2 s_i + s_i^2}``, rescaled to max 1."""
    if np.any(spec.x == 0):
        raise InfeasibleDesignError("optimal weight needs every x_i nonzero")
    a = spec.x ** 2 / _noise_terms(spec)
    return a / a.max()


def design_example2(sigma_sq, sigma_max_sq: float, beta1: float) -> np.ndarray:
    """Covariate design under which identity weighting beats inverse-Sigma weighting."""
    s = np.asarray(sigma_sq, dtype=float).reshape(-1)
    if np.any(s <= 0) or np.any(s >= sigma_max_sq):
        raise InfeasibleDesignError("need 0 < sigma_i^2 < sigma_max^2 for every i")
    return np.sqrt(s ** 2 / ((1.0 + beta1 ** 2) * (sigma_max_sq - s)))


def amse_example2(sigma_sq, sigma_max_sq: float, beta1: float):
    """``(amse inverse-Sigma weight, amse identity weight)`` on the design where identity weighting is optimal."""
    s = np.asarray(sigma_sq, dtype=float)
    x = design_example2(s, sigma_max_sq, beta1)
    c = x ** 2 / s
    k = 1.0 + beta1 ** 2
    pre = float(np.sum(1.0 + k * c)) / float(np.sum(c)) ** 2
    unpre = 1.0 / float(np.sum(c ** 2 / (1.0 + k * c)))
    return pre, unpre


def design_example3_check(sigma_sq, beta1: float):
    """``(amse prewhitened, amse unprewhitened)`` with ``x_i^2 = sigma_i^2``.

    Both values come from the general finite-p formula, not the closed forms,
    so callers can compare them against ``(2 + b^2)/p`` and
    ``(2 + b^2) sum s^2 / (sum s)^2``.
    """
    s = np.asarray(sigma_sq, dtype=float).reshape(-1)
    if np.any(s <= 0):
        raise InfeasibleDesignError("sigma_i^2 must be positive")
    x = np.sqrt(s)
    p = s.size
    pre = amse_weighted([beta1], np.diag(1.0 / s), x, np.diag(s))[0, 0] / p
    unpre = amse_weighted([beta1], np.eye(p), x, np.diag(s))[0, 0] / p
    return float(pre), float(unpre)
