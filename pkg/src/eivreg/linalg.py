"""Dense symmetric linear algebra kernels.

Everything here is deterministic and free of shared mutable state. The single
conditioning constant ``PD_RTOL`` governs every positive-definiteness and
invertibility decision in the package; pass ``rtol=`` to override locally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import IllConditionedError, InputError, NotPositiveDefiniteError

PD_RTOL = 1e-12
SYM_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns paired with eigenvalues

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def abs_max(self) -> float:
        return float(max(abs(self.eigenvalues[0]), abs(self.eigenvalues[-1])))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def as_symmetric(m, name="matrix") -> np.ndarray:
    """Validate ``m`` as a finite square symmetric matrix and return it as float array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    tol = SYM_RTOL * np.maximum(1.0, np.abs(a))
    if np.any(np.abs(a - a.T) > tol):
        raise InputError(f"{name} is not symmetric")
    return a


def sym_eigen(m) -> Spectrum:
    a = as_symmetric(m)
    w, v = np.linalg.eigh(a)
    return Spectrum(w, v)


def sym_eigvals(m) -> np.ndarray:
    """Ascending eigenvalues only; cheaper than :func:`sym_eigen` when vectors are unused."""
    return np.linalg.eigvalsh(as_symmetric(m))


def cholesky_lower(m, rtol: float = PD_RTOL) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == m``.

    A pivot ``L[j, j]**2`` at or below ``rtol * trace(m) / dim`` is treated as a
    failure; the raised :class:`NotPositiveDefiniteError` carries ``j``.
    """
    a = as_symmetric(m)
    dim = a.shape[0]
    floor = rtol * np.trace(a) / dim
    c, info = lapack.dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(
            f"matrix not positive definite (pivot {info - 1})", pivot=info - 1
        )
    if info < 0:
        raise InputError(f"dpotrf rejected argument {-info}")
    pivots = np.diag(c) ** 2
    bad = np.flatnonzero(pivots <= floor)
    if bad.size or floor <= 0:
        j = int(bad[0]) if bad.size else 0
        raise NotPositiveDefiniteError(
            f"matrix not positive definite (pivot {j} = {pivots[j]:.3e})", pivot=j
        )
    return c


def spectral_norm(m) -> float:
    w = sym_eigvals(m)
    return float(max(abs(w[0]), abs(w[-1])))


def solve_with_spectrum(spec: Spectrum, rhs, rtol: float = PD_RTOL,
                        require_pd: bool = True) -> np.ndarray:
    """Solve ``M x = rhs`` given the eigendecomposition of ``M``.

    With ``require_pd`` the smallest eigenvalue must clear ``rtol * lambda_max``.
    Without it, ``M`` may be indefinite, but the smallest eigenvalue in modulus
    must clear ``rtol`` times the largest in modulus.
    """
    w = spec.eigenvalues
    if require_pd:
        if w[-1] <= 0 or w[0] <= 0:
            raise NotPositiveDefiniteError(
                f"matrix not positive definite (lambda_min = {w[0]:.3e})"
            )
        ratio = w[0] / w[-1]
    else:
        aw = np.abs(w)
        top = aw.max()
        ratio = aw.min() / top if top > 0 else 0.0
    if ratio <= rtol:
        raise IllConditionedError(f"ill-conditioned matrix (ratio {ratio:.3e})", ratio=ratio)
    v = spec.eigenvectors
    b = np.asarray(rhs, dtype=float)
    vb = v.T @ b
    vb = vb / w if b.ndim == 1 else vb / w[:, None]
    return v @ vb


def solve_spd(m, rhs, rtol: float = PD_RTOL) -> np.ndarray:
    a = as_symmetric(m)
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise InputError(f"rhs has {b.shape[0]} rows, matrix has dim {a.shape[0]}")
    return solve_with_spectrum(sym_eigen(a), b, rtol=rtol, require_pd=True)


# Acklam's rational approximation of the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_tail(q: float) -> float:
    # q <= 0.5; returns a negative (or zero) quantile
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        x = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / \
            ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    else:
        s = q - 0.5
        r = s * s
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # one Halley step against the exact CDF
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(q: float) -> float:
    """Inverse standard normal CDF, accurate to about 1e-9 absolute."""
    if not (isinstance(q, (int, float, np.floating)) and 0.0 < q < 1.0):
        raise InputError(f"quantile level must lie in (0, 1), got {q!r}")
    q = float(q)
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return _lower_tail(q)
    return -_lower_tail(1.0 - q)
