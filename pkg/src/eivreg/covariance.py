"""Covariance construction and the tapered ensemble estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .errors import InputError, ModelInfeasibleError, NotPositiveDefiniteError
from .linalg import PD_RTOL, Spectrum


@dataclass(frozen=True)
class CovarianceModel:
    """Polynomially decaying correlations with heteroscedastic variances.

    ``sigma_ij = rho |i - j|^{-(alpha + 1)} sigma_i sigma_j`` off the diagonal.
    ``rho = 0`` is accepted and yields a diagonal matrix.
    """

    rho: float
    alpha: float
    sigma_sq: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma_sq, dtype=float).reshape(-1)
        if s.size < 1 or np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise InputError("sigma_sq must be a non-empty vector of positive variances")
        if self.rho < 0 or self.alpha <= 0:
            raise InputError(f"need rho >= 0 and alpha > 0, got rho={self.rho}, alpha={self.alpha}")
        object.__setattr__(self, "sigma_sq", s)

    @property
    def p(self) -> int:
        return self.sigma_sq.size


@dataclass(frozen=True)
class Ensemble:
    vectors: np.ndarray  # n x p, one replicate per row

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise InputError(f"ensemble needs at least 2 replicate vectors, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("ensemble has non-finite entries")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class TaperedEstimate:
    sigma_hat: np.ndarray
    bandwidth_k: int

    @cached_property
    def spectrum(self) -> Spectrum:
        return linalg.sym_eigen(self.sigma_hat)

    @property
    def lambda_min(self) -> float:
        return self.spectrum.lambda_min

    @property
    def lambda_max(self) -> float:
        return self.spectrum.lambda_max

    @property
    def invertible(self) -> bool:
        return self.lambda_min > PD_RTOL * self.lambda_max


def lag_matrix(p: int) -> np.ndarray:
    idx = np.arange(p)
    return np.abs(idx[:, None] - idx[None, :])


def build_sigma(model: CovarianceModel, check: bool = True) -> np.ndarray:
    p = model.p
    lag = lag_matrix(p).astype(float)
    corr = np.zeros_like(lag)
    off = lag > 0
    corr[off] = model.rho * lag[off] ** (-(model.alpha + 1.0))
    np.fill_diagonal(corr, 1.0)
    s = np.sqrt(model.sigma_sq)
    sigma = corr * np.outer(s, s)
    np.fill_diagonal(sigma, model.sigma_sq)
    if check:
        try:
            linalg.cholesky_lower(sigma)
        except NotPositiveDefiniteError as exc:
            raise ModelInfeasibleError(
                f"covariance with rho={model.rho}, alpha={model.alpha} is not positive definite"
            ) from exc
    return sigma


def ensemble_cov(e: Ensemble) -> np.ndarray:
    """Mean-centred sample covariance with divisor ``n``."""
    v = e.vectors
    c = v - v.mean(axis=0)
    s = c.T @ c / e.n
    return 0.5 * (s + s.T)


def bandwidth(n: int, alpha: float) -> int:
    """``floor(n ** (1 / (2 alpha + 1)))``, at least 1."""
    if n < 1 or alpha <= 0:
        raise InputError(f"need n >= 1 and alpha > 0, got n={n}, alpha={alpha}")
    e = 2.0 * alpha + 1.0
    k = int(math.floor(n ** (1.0 / e)))
    # guard against the root landing just below an exact integer
    while (k + 1) ** e <= n * (1.0 + 1e-12):
        k += 1
    while k > 1 and k ** e > n * (1.0 + 1e-12):
        k -= 1
    return max(k, 1)


def taper_weight(k, lag):
    """Trapezoidal weight: 1 up to lag k/2, linear down to 0 at lag k."""
    lag = np.asarray(lag, dtype=float)
    k = float(k)
    w = (2.0 / k) * (np.maximum(k - lag, 0.0) - np.maximum(k / 2.0 - lag, 0.0))
    return float(w) if w.ndim == 0 else w


def taper(sigma_tilde, k: int) -> TaperedEstimate:
    s = linalg.as_symmetric(sigma_tilde, "sigma_tilde")
    if k < 1:
        raise InputError(f"bandwidth must be >= 1, got {k}")
    w = taper_weight(k, lag_matrix(s.shape[0]))
    return TaperedEstimate(w * s, int(k))


def trace_ratios(sigma_hat):
    s = linalg.as_symmetric(sigma_hat, "sigma_hat")
    p = s.shape[0]
    return float(np.trace(s)) / p, float(np.sum(s * s)) / p


def sample_ensemble(L: np.ndarray, n: int, rng: np.random.Generator) -> Ensemble:
    """``n`` draws ``L g`` with ``g`` standard normal, as rows."""
    g = rng.standard_normal((L.shape[0], n))
    return Ensemble((L @ g).T)
