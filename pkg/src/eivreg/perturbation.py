"""Computable perturbation bounds for the weighted estimator in the weight matrix.

For symmetric ``A`` (positive definite) and ``B`` with

    delta     = ||A^{-1}|| ||B - A||
    delta_hat = (lmax(Q_zz) + lmax(Q_ww)) / (lmin(Q_zz) - lmin(Q_ww)) * delta
    ub        = lmax(Q_zz)^{1/2} Q_yy^{1/2} / (lmin(Q_zz) - lmin(Q_ww))

(all Q's weighted by ``A``), ``delta_hat < 1`` guarantees that ``B`` is
positive definite, ``beta(B)`` exists, and

    ||beta(B)||           <= (1 + delta_hat) / (1 - delta_hat) * ub
    ||beta(B) - beta(A)|| <= 2 delta_hat / (1 - delta_hat) * ub.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import CertificateInapplicableError, InputError
from .estimator import Dataset, QStats, Weighting, q_stats, tls_fit

SLACK = 1e-9


@dataclass(frozen=True)
class PerturbationReport:
    delta: float
    delta_hat: float
    ub: float
    applicable: bool
    beta_a: np.ndarray
    bound_norm: Optional[float] = None
    bound_diff: Optional[float] = None
    beta_b: Optional[np.ndarray] = None
    measured_norm: Optional[float] = None
    measured_diff: Optional[float] = None
    b_positive_definite: Optional[bool] = None
    label: str = ""

    @property
    def holds(self) -> Optional[bool]:
        """Whether both inequalities hold (``None`` when inapplicable)."""
        if not self.applicable:
            return None
        return (self.measured_diff <= self.bound_diff + SLACK
                and self.measured_norm <= self.bound_norm + SLACK
                and bool(self.b_positive_definite))


def delta(A, B) -> float:
    a = linalg.as_symmetric(A, "A")
    b = linalg.as_symmetric(B, "B")
    if a.shape != b.shape:
        raise InputError(f"A and B differ in shape: {a.shape} vs {b.shape}")
    lam_min = linalg.sym_eigvals(a)[0]
    if lam_min <= 0:
        raise InputError(f"A must be positive definite (lambda_min = {lam_min:.3e})")
    return linalg.spectral_norm(b - a) / lam_min


def _denominator(stats: QStats) -> float:
    d = stats.lambda_min_zz - stats.lambda_min_ww
    if not d > 0:
        raise CertificateInapplicableError(
            f"lambda_min(Q_zz) - lambda_min(Q_ww) = {d:.3e} is not positive")
    return d


def delta_hat(stats_a: QStats, delta_value: float) -> float:
    return (stats_a.lambda_max_zz + stats_a.lambda_max_ww) / _denominator(stats_a) * delta_value


def ub_norm(stats_a: QStats) -> float:
    # clip rounding noise; Q_zz and Q_yy are nonnegative for PD weights
    num = math.sqrt(max(stats_a.lambda_max_zz, 0.0)) * math.sqrt(max(stats_a.q_yy, 0.0))
    return num / _denominator(stats_a)


def certify_tls_perturbation(data: Dataset, A, B, label: str = "") -> PerturbationReport:
    a = linalg.as_symmetric(A, "A")
    b = linalg.as_symmetric(B, "B")
    d = delta(a, b)
    stats_a = q_stats(data, Weighting.explicit(a))
    dh = delta_hat(stats_a, d)
    ub = ub_norm(stats_a)
    beta_a = tls_fit(data, Weighting.explicit(a)).beta_hat
    if not dh < 1.0:
        return PerturbationReport(d, dh, ub, False, beta_a, label=label)
    b_pd = bool(linalg.sym_eigvals(b)[0] > 0)
    beta_b = tls_fit(data, Weighting.explicit(b, verify=False)).beta_hat
    return PerturbationReport(
        delta=d, delta_hat=dh, ub=ub, applicable=True, beta_a=beta_a,
        bound_norm=(1.0 + dh) / (1.0 - dh) * ub,
        bound_diff=2.0 * dh / (1.0 - dh) * ub,
        beta_b=beta_b,
        measured_norm=float(np.linalg.norm(beta_b)),
        measured_diff=float(np.linalg.norm(beta_b - beta_a)),
        b_positive_definite=b_pd,
        label=label,
    )


@dataclass(frozen=True)
class InversionCheck:
    delta: float
    inv_norm_a: float
    inv_norm_b: float
    inv_gap: float
    bound_inv_norm: float
    bound_inv_gap: float

    @property
    def passed(self) -> bool:
        tol = 1e-9
        return (self.inv_norm_b <= self.bound_inv_norm * (1 + tol)
                and self.inv_gap <= self.bound_inv_gap * (1 + tol) + tol * self.inv_norm_a)


def inversion_perturbation_check(A, B) -> InversionCheck:
    """Check ``||B^-1|| <= ||A^-1||/(1-d)`` and ``||B^-1 - A^-1|| <= d/(1-d) ||A^-1||``.

    Explicit inverses are formed here on purpose; that is the quantity under test.
    """
    a = linalg.as_symmetric(A, "A")
    b = linalg.as_symmetric(B, "B")
    ev = linalg.sym_eigvals(a)
    amin = np.min(np.abs(ev))
    if amin == 0:
        raise InputError("A is singular")
    inv_norm_a = 1.0 / amin
    d = inv_norm_a * linalg.spectral_norm(b - a)
    if not d < 1.0:
        raise CertificateInapplicableError(f"delta = {d:.3f} >= 1")
    ai = np.linalg.inv(a)
    bi = np.linalg.inv(b)
    gap = bi - ai
    return InversionCheck(
        delta=d,
        inv_norm_a=inv_norm_a,
        inv_norm_b=linalg.spectral_norm(0.5 * (bi + bi.T)),
        inv_gap=linalg.spectral_norm(0.5 * (gap + gap.T)),
        bound_inv_norm=inv_norm_a / (1.0 - d),
        bound_inv_gap=d / (1.0 - d) * inv_norm_a,
    )


@dataclass(frozen=True)
class WeylCheck:
    max_gap: float
    norm_diff: float

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.norm_diff + SLACK


def weyl_gap_check(A, B) -> WeylCheck:
    a = linalg.as_symmetric(A, "A")
    b = linalg.as_symmetric(B, "B")
    if a.shape != b.shape:
        raise InputError("A and B must have equal dimensions")
    la = linalg.sym_eigvals(a)[::-1]
    lb = linalg.sym_eigvals(b)[::-1]
    return WeylCheck(float(np.max(np.abs(lb - la))), linalg.spectral_norm(b - a))


def prewhitening_diagnostic(sigma, sigma_hat) -> float:
    """``sqrt(p) ||Sigma|| ||Sigma_hat^-1 - Sigma^-1||``; must vanish for valid prewhitening."""
    s = linalg.as_symmetric(sigma, "sigma")
    sh = linalg.as_symmetric(sigma_hat, "sigma_hat")
    gap = np.linalg.inv(sh) - np.linalg.inv(s)
    gap = 0.5 * (gap + gap.T)
    return math.sqrt(s.shape[0]) * linalg.spectral_norm(s) * linalg.spectral_norm(gap)


def certify_prewhitening(data: Dataset, sigma, sigma_hat):
    """Certificates between ``inv(Sigma)`` and ``inv(Sigma_hat)`` in both roles.

    ``oracle`` anchors at ``A = inv(Sigma)`` (the theoretical comparison);
    ``applied`` anchors at ``A = inv(Sigma_hat)`` and uses only observable
    quantities on the anchor side. The applied one needs ``Sigma_hat`` PD.
    """
    s_inv = np.linalg.inv(linalg.as_symmetric(sigma, "sigma"))
    sh_inv = np.linalg.inv(linalg.as_symmetric(sigma_hat, "sigma_hat"))
    s_inv = 0.5 * (s_inv + s_inv.T)
    sh_inv = 0.5 * (sh_inv + sh_inv.T)
    out = {"oracle": certify_tls_perturbation(data, s_inv, sh_inv, label="oracle")}
    try:
        out["applied"] = certify_tls_perturbation(data, sh_inv, s_inv, label="applied")
    except InputError:
        out["applied"] = None
    return out
