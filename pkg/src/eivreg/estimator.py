"""Weighted total-least-squares estimation for errors-in-variables regression.

The estimator for a weight matrix ``A`` is

    beta(A) = {Q_zz(A) - lambda_min(Q_ww(A)) I_m}^{-1} Q_zy(A),

with ``Q_..(A) = (.)^T A (.) / p`` and ``W = (Z, y)``. ``A = I`` gives the
classical orthogonal-regression estimator; ``A = inv(Sigma_hat)`` gives the
prewhitened one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import linalg
from .errors import (DegenerateFitError, DegenerateInferenceError, EivError,
                     IllConditionedError, InputError, NotPositiveDefiniteError)
from .linalg import PD_RTOL, Spectrum

UNPREWHITENED = "unprewhitened"
PREWHITENED = "prewhitened"
CUSTOM = "custom"


@dataclass(frozen=True)
class Dataset:
    Z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
            raise InputError(f"Z has shape {Z.shape} but y has length {y.shape[0]}")
        p, m = Z.shape
        if not p > m >= 1:
            raise InputError(f"need p > m >= 1, got p={p}, m={m}")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
            raise InputError("dataset has non-finite entries")
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "y", y)

    @property
    def p(self) -> int:
        return self.Z.shape[0]

    @property
    def m(self) -> int:
        return self.Z.shape[1]

    @property
    def W(self) -> np.ndarray:
        return np.column_stack([self.Z, self.y])


@dataclass(frozen=True)
class Weighting:
    """A p x p weight, either ``I``, an explicit matrix, or the inverse of one.

    ``verify`` controls the positive-definiteness check made on realization.
    With ``verify=False`` an indefinite matrix is accepted; an inverse_of
    weighting then only requires the matrix to be numerically nonsingular.
    """

    kind: str = "identity"
    matrix: Optional[np.ndarray] = None
    verify: bool = True
    rtol: float = PD_RTOL
    eigen: Optional[Spectrum] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("identity", "explicit", "inverse_of"):
            raise InputError(f"unknown weighting kind {self.kind!r}")
        if self.kind != "identity":
            if self.matrix is None:
                raise InputError(f"{self.kind} weighting needs a matrix")
            object.__setattr__(self, "matrix",
                               linalg.as_symmetric(self.matrix, "weight matrix"))

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def explicit(cls, matrix, verify=True, eigen=None):
        return cls("explicit", matrix, verify, eigen=eigen)

    @classmethod
    def inverse_of(cls, matrix, verify=True, eigen=None):
        """``eigen`` may carry a precomputed decomposition of ``matrix``."""
        return cls("inverse_of", matrix, verify, eigen=eigen)

    @property
    def spectrum(self) -> Optional[Spectrum]:
        """Eigendecomposition of the stored matrix (not of the realized weight)."""
        if self.matrix is None:
            return None
        if self.eigen is None:
            object.__setattr__(self, "eigen", linalg.sym_eigen(self.matrix))
        return self.eigen

    def check(self, p: int):
        """Raise unless the realized weight is usable for dimension ``p``."""
        if self.kind == "identity":
            return
        if self.matrix.shape[0] != p:
            raise InputError(f"weight has dim {self.matrix.shape[0]}, data has p={p}")
        if self.kind == "explicit" and not self.verify:
            return
        w = self.spectrum.eigenvalues
        if self.verify:
            if w[0] <= 0:
                raise NotPositiveDefiniteError(
                    f"weight matrix not positive definite (lambda_min = {w[0]:.3e})")
            if w[0] <= self.rtol * w[-1]:
                raise IllConditionedError("ill-conditioned weight matrix",
                                          ratio=w[0] / w[-1])
        else:
            aw = np.abs(w)
            ratio = aw.min() / aw.max() if aw.max() > 0 else 0.0
            if ratio <= self.rtol:
                raise IllConditionedError("singular weight matrix", ratio=ratio)

    def apply(self, M: np.ndarray) -> np.ndarray:
        """Return ``A @ M`` for the realized weight ``A``."""
        if self.kind == "identity":
            return M
        if self.kind == "explicit":
            return self.matrix @ M
        return linalg.solve_with_spectrum(self.spectrum, M, rtol=self.rtol,
                                          require_pd=self.verify)

    def dense(self) -> np.ndarray:
        """The realized weight as a dense matrix."""
        if self.kind == "identity":
            raise InputError("identity weighting has no intrinsic dimension; use np.eye")
        if self.kind == "explicit":
            return self.matrix
        return self.apply(np.eye(self.matrix.shape[0]))

    def scaled(self, c: float) -> "Weighting":
        """Weighting realizing ``c * A``."""
        if self.kind == "identity":
            raise InputError("scale an explicit identity matrix instead")
        if self.kind == "explicit":
            return Weighting("explicit", c * self.matrix, self.verify, self.rtol)
        return Weighting("inverse_of", self.matrix / c, self.verify, self.rtol)


@dataclass(frozen=True)
class QStats:
    q_zz: np.ndarray
    q_zy: np.ndarray
    q_yy: float
    q_ww: np.ndarray
    lambda_min_ww: float
    lambda_max_ww: float
    lambda_min_zz: float
    lambda_max_zz: float

    @property
    def gap(self) -> float:
        """``lambda_min(Q_zz) - lambda_min(Q_ww)``, nonnegative by interlacing."""
        return self.lambda_min_zz - self.lambda_min_ww


@dataclass(frozen=True)
class EivFit:
    beta_hat: np.ndarray
    qxx0_hat: np.ndarray
    p: int
    stats: QStats
    variant: str = CUSTOM
    omega_hat: Optional[np.ndarray] = None
    ci: Optional[np.ndarray] = None  # (m, 2) rows of (lower, upper)
    level: Optional[float] = None
    condition_report: dict = field(default_factory=dict)

    @property
    def ci_length(self) -> Optional[np.ndarray]:
        if self.ci is None:
            return None
        return self.ci[:, 1] - self.ci[:, 0]


def q_stats(data: Dataset, w: Weighting) -> QStats:
    w.check(data.p)
    W = data.W
    q_ww = W.T @ w.apply(W) / data.p
    q_ww = 0.5 * (q_ww + q_ww.T)
    m = data.m
    q_zz = q_ww[:m, :m]
    ev_ww = np.linalg.eigvalsh(q_ww)
    ev_zz = np.linalg.eigvalsh(q_zz)
    return QStats(
        q_zz=q_zz,
        q_zy=q_ww[:m, m].copy(),
        q_yy=float(q_ww[m, m]),
        q_ww=q_ww,
        lambda_min_ww=float(ev_ww[0]),
        lambda_max_ww=float(ev_ww[-1]),
        lambda_min_zz=float(ev_zz[0]),
        lambda_max_zz=float(ev_zz[-1]),
    )


def _shifted_solve(stats: QStats, rtol: float):
    m = stats.q_zz.shape[0]
    shifted = stats.q_zz - stats.lambda_min_ww * np.eye(m)
    try:
        beta = linalg.solve_spd(shifted, stats.q_zy, rtol=rtol)
    except (NotPositiveDefiniteError, IllConditionedError) as exc:
        raise DegenerateFitError(f"shifted normal matrix is singular: {exc}") from exc
    return beta, shifted


def tls_fit(data: Dataset, w: Weighting, variant: str = CUSTOM,
            rtol: float = PD_RTOL) -> EivFit:
    """Fit the weighted estimator; ``qxx0_hat`` is the shifted normal matrix."""
    stats = q_stats(data, w)
    beta, shifted = _shifted_solve(stats, rtol)
    report = {"gap": stats.gap, "weight_kind": w.kind}
    if w.matrix is not None:
        ev = w.spectrum.eigenvalues
        report["weight_lambda_min"] = float(ev[0])
        report["weight_lambda_max"] = float(ev[-1])
        report["weight_pd"] = bool(ev[0] > 0)
    return EivFit(beta_hat=beta, qxx0_hat=shifted, p=data.p, stats=stats,
                  variant=variant, condition_report=report)


def _sandwich(q0: np.ndarray, middle: np.ndarray, beta: np.ndarray, rtol: float):
    try:
        spec = linalg.sym_eigen(q0)
        left = linalg.solve_with_spectrum(spec, middle, rtol=rtol)
        omega = linalg.solve_with_spectrum(spec, left.T, rtol=rtol)
    except EivError as exc:
        raise DegenerateInferenceError(f"Q_xx0 estimate is singular: {exc}") from exc
    omega = (1.0 + beta @ beta) * omega
    return 0.5 * (omega + omega.T)


def omega_formula(beta, qxx0, qxx1, tau2, rtol: float = PD_RTOL) -> np.ndarray:
    """``(1 + b'b) Q0^{-1} {Q1 + tau2 (I + bb')^{-1}} Q0^{-1}``."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    m = beta.shape[0]
    qxx0 = np.atleast_2d(np.asarray(qxx0, dtype=float))
    qxx1 = np.atleast_2d(np.asarray(qxx1, dtype=float))
    shrink = np.linalg.inv(np.eye(m) + np.outer(beta, beta))
    middle = qxx1 + tau2 * shrink
    return _sandwich(qxx0, middle, beta, rtol)


def plug_in_omega(data: Dataset, fit: EivFit, sigma_hat=None,
                  variant: Optional[str] = None, rtol: float = PD_RTOL) -> np.ndarray:
    """Plug-in estimate of the asymptotic covariance of ``sqrt(p) (beta_hat - beta)``.

    ``unprewhitened`` expects ``fit`` to come from ``A = I`` and needs
    ``sigma_hat``; ``Q_xx1`` is estimated with ``sigma_hat`` itself as the
    weight. ``prewhitened`` expects ``A = inv(sigma_hat)`` and uses the fit's
    shifted matrix in both slots of the formula with ``tau2 = 1``.
    """
    variant = variant or fit.variant
    beta = fit.beta_hat
    if variant == UNPREWHITENED:
        if sigma_hat is None:
            raise InputError("unprewhitened plug-in needs sigma_hat")
        sig = linalg.as_symmetric(sigma_hat, "sigma_hat")
        stats1 = q_stats(data, Weighting.explicit(sig, verify=False))
        m = data.m
        qxx1 = stats1.q_zz - stats1.lambda_min_ww * np.eye(m)
        ev1 = np.linalg.eigvalsh(qxx1)
        if ev1[-1] <= 0 or ev1[0] <= rtol * ev1[-1]:
            raise DegenerateInferenceError("Q_xx1 estimate is singular")
        tau2 = float(np.sum(sig * sig)) / data.p
        return omega_formula(beta, fit.qxx0_hat, qxx1, tau2, rtol)
    if variant == PREWHITENED:
        return omega_formula(beta, fit.qxx0_hat, fit.qxx0_hat, 1.0, rtol)
    raise InputError(f"plug-in covariance defined for unprewhitened/prewhitened, got {variant!r}")


def confidence_intervals(fit: EivFit, omega, level: float = 0.95) -> np.ndarray:
    """Per-coordinate normal intervals ``beta_j -/+ z sqrt(omega_jj / p)``."""
    if not 0.0 < level < 1.0:
        raise InputError(f"level must be in (0, 1), got {level}")
    diag = np.diag(np.atleast_2d(omega))
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
        raise DegenerateInferenceError(f"nonpositive asymptotic variance {diag}")
    z = linalg.normal_quantile(0.5 + level / 2.0)
    half = z * np.sqrt(diag / fit.p)
    return np.column_stack([fit.beta_hat - half, fit.beta_hat + half])


def infer(data: Dataset, w: Weighting, variant: str, sigma_hat=None,
          level: float = 0.95) -> EivFit:
    """Fit, estimate the covariance and attach confidence intervals."""
    fit = tls_fit(data, w, variant=variant)
    omega = plug_in_omega(data, fit, sigma_hat, variant)
    ci = confidence_intervals(fit, omega, level)
    return replace(fit, omega_hat=omega, ci=ci, level=level)


def fit_unprewhitened(data: Dataset, sigma_hat, level: float = 0.95) -> EivFit:
    return infer(data, Weighting.identity(), UNPREWHITENED, sigma_hat, level)


def fit_prewhitened(data: Dataset, sigma_hat, level: float = 0.95,
                    require_pd: bool = True, eigen: Optional[Spectrum] = None) -> EivFit:
    w = Weighting.inverse_of(sigma_hat, verify=require_pd, eigen=eigen)
    return infer(data, w, PREWHITENED, sigma_hat, level)
