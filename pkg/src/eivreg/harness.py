"""Monte Carlo coverage study for the unprewhitened and prewhitened intervals.

One cell fixes ``(p, n, rho, alpha, beta1)``. The truth ``(Sigma, x)`` is drawn
once and reused by every replication. Each replication draws fresh
``epsilon``, ``u`` and (for finite ``n``) an ensemble of ``n`` replicate
errors, tapers the ensemble covariance and builds both intervals.

Random streams are keyed by ``(seed, cell id, replication, purpose)``, so a
replication's result does not depend on scheduling or thread count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .covariance import (CovarianceModel, bandwidth, build_sigma, ensemble_cov,
                         sample_ensemble, taper)
from .efficiency import design_example2
from .errors import EivError, InputError
from .estimator import (PREWHITENED, UNPREWHITENED, Dataset, fit_prewhitened,
                        fit_unprewhitened)

INFINITE = math.inf
VARIANTS = (UNPREWHITENED, PREWHITENED)

_TRUTH_TAG = 0x7472
_EPS, _U, _ENSEMBLE = 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    p: int
    rho: float
    alpha: float
    n: float = INFINITE
    beta1: float = 2.0
    sigma_sq_range: tuple = (0.02, 0.18)
    reps: int = 1000
    seed: int = 0
    level: float = 0.95
    variants: tuple = VARIANTS
    # "raw": invert an indefinite Sigma_hat as long as it is nonsingular;
    # "strict": record a failure whenever Sigma_hat is not positive definite.
    prewhiten_policy: str = "raw"
    m: int = 1

    def __post_init__(self):
        n = self.n
        if isinstance(n, str):
            if n.lower() not in ("inf", "infinite", "infinity"):
                raise InputError(f"n must be an integer or 'inf', got {n!r}")
            n = INFINITE
        elif n != INFINITE:
            if int(n) != n:
                raise InputError(f"n must be an integer or 'inf', got {n!r}")
            n = int(n)
        object.__setattr__(self, "n", n)
        lo, hi = (float(v) for v in self.sigma_sq_range)
        object.__setattr__(self, "sigma_sq_range", (lo, hi))
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.m != 1:
            raise InputError("the simulation harness supports m = 1 only")
        if self.p <= 2:
            raise InputError(f"p must exceed 2, got {self.p}")
        if self.reps < 1:
            raise InputError(f"reps must be >= 1, got {self.reps}")
        if not 0 < lo <= hi:
            raise InputError(f"sigma_sq_range must satisfy 0 < low <= high, got {(lo, hi)}")
        if not (1.0 + self.beta1 ** 2) * hi < 1.0:
            raise InputError(
                f"(1 + beta1^2) * {hi} >= 1: the covariate design is infeasible")
        if self.n != INFINITE and self.n < 2:
            raise InputError(f"ensemble size must be >= 2, got {self.n}")
        if not 0 < self.level < 1:
            raise InputError(f"level must lie in (0, 1), got {self.level}")
        if self.rho < 0 or self.alpha <= 0:
            raise InputError("need rho >= 0 and alpha > 0")
        bad = set(self.variants) - set(VARIANTS)
        if bad or not self.variants:
            raise InputError(f"variants must be a nonempty subset of {VARIANTS}")
        if self.prewhiten_policy not in ("raw", "strict"):
            raise InputError(f"unknown prewhiten_policy {self.prewhiten_policy!r}")

    @property
    def infinite(self) -> bool:
        return self.n == INFINITE

    @property
    def n_label(self) -> str:
        return "inf" if self.infinite else str(self.n)

    @property
    def cell_id(self) -> int:
        """Stable 64-bit key of everything that defines the cell except seed and reps."""
        key = json.dumps([self.p, self.n_label, repr(float(self.rho)), repr(float(self.alpha)),
                          repr(float(self.beta1)), [repr(v) for v in self.sigma_sq_range],
                          repr(float(self.level)), self.prewhiten_policy], separators=(",", ":"))
        return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class Truth:
    sigma: np.ndarray
    chol: np.ndarray
    x: np.ndarray
    beta1: float
    sigma_sq: np.ndarray
    sigma_spectrum: linalg.Spectrum = field(repr=False)


def gen_truth(config: SimConfig, rng: Optional[np.random.Generator] = None) -> Truth:
    """Draw the variances, build ``Sigma`` and the covariate vector.

    By default the variance draw is keyed on ``(seed, p)`` only, so every cell
    of a grid sharing seed and p sees the same variances, as in a study where
    they are drawn once and held fixed.
    """
    if rng is None:
        rng = stream(config.seed, _TRUTH_TAG, config.p)
    lo, hi = config.sigma_sq_range
    s2 = rng.uniform(lo, hi, size=config.p) if hi > lo else np.full(config.p, lo)
    sigma = build_sigma(CovarianceModel(config.rho, config.alpha, s2))
    chol = linalg.cholesky_lower(sigma)
    x = design_example2(s2, 1.0 / (1.0 + config.beta1 ** 2), config.beta1)
    return Truth(sigma, chol, x, float(config.beta1), s2, linalg.sym_eigen(sigma))


@dataclass(frozen=True)
class VariantRecord:
    beta_hat: Optional[float] = None
    omega_hat: Optional[float] = None
    ci: Optional[tuple] = None
    covered: Optional[bool] = None
    ci_length: Optional[float] = None
    failure: Optional[str] = None


@dataclass(frozen=True)
class RepRecord:
    index: int
    variants: dict
    sigma_hat_pd: bool = True
    bandwidth_k: Optional[int] = None


def _record(fit_fn, beta1) -> VariantRecord:
    try:
        fit = fit_fn()
    except EivError as exc:
        return VariantRecord(failure=f"{type(exc).__name__}: {exc}")
    lo, hi = fit.ci[0]
    return VariantRecord(
        beta_hat=float(fit.beta_hat[0]),
        omega_hat=float(fit.omega_hat[0, 0]),
        ci=(float(lo), float(hi)),
        covered=bool(lo <= beta1 <= hi),
        ci_length=float(hi - lo),
    )


def run_replication(truth: Truth, config: SimConfig, index: int,
                    cell_id: Optional[int] = None) -> RepRecord:
    cid = config.cell_id if cell_id is None else cell_id
    L = truth.chol
    p = L.shape[0]
    eps = L @ stream(config.seed, cid, index, _EPS).standard_normal(p)
    u = L @ stream(config.seed, cid, index, _U).standard_normal(p)
    data = Dataset((truth.x + u)[:, None], truth.beta1 * truth.x + eps)

    k = None
    if config.infinite:
        sigma_hat, eigen = truth.sigma, truth.sigma_spectrum
    else:
        ens = sample_ensemble(L, config.n, stream(config.seed, cid, index, _ENSEMBLE))
        k = bandwidth(config.n, config.alpha)
        est = taper(ensemble_cov(ens), k)
        sigma_hat, eigen = est.sigma_hat, est.spectrum
    pd = bool(eigen.lambda_min > 0)

    out = {}
    if UNPREWHITENED in config.variants:
        out[UNPREWHITENED] = _record(
            lambda: fit_unprewhitened(data, sigma_hat, config.level), truth.beta1)
    if PREWHITENED in config.variants:
        strict = config.prewhiten_policy == "strict"
        out[PREWHITENED] = _record(
            lambda: fit_prewhitened(data, sigma_hat, config.level,
                                    require_pd=strict, eigen=eigen), truth.beta1)
    return RepRecord(index, out, pd, k)


@dataclass(frozen=True)
class VariantSummary:
    coverage_rate: float  # over non-failed replications
    coverage_inclusive: float  # failures counted as misses
    mean_length: float
    median_length: float
    failure_count: int
    ok_count: int
    indefinite_count: int  # replications whose Sigma_hat was not PD


@dataclass(frozen=True)
class CellResult:
    config: SimConfig
    summaries: dict
    wall_time: float
    records: tuple = field(default=(), repr=False, compare=False)

    def row(self, variant: str) -> dict:
        s = self.summaries[variant]
        c = self.config
        return {"rho": c.rho, "alpha": c.alpha, "n": c.n_label, "variant": variant,
                **asdict(s), "reps": c.reps, "seed": c.seed, "p": c.p}


def summarize(records: Sequence[RepRecord], variant: str) -> VariantSummary:
    recs = [r.variants[variant] for r in sorted(records, key=lambda r: r.index)]
    ok = [v for v in recs if v.failure is None]
    indef = sum(1 for r in records if not r.sigma_hat_pd)
    n_ok = len(ok)
    covered = np.array([v.covered for v in ok], dtype=float)
    lengths = np.array([v.ci_length for v in ok], dtype=float)
    return VariantSummary(
        coverage_rate=float(covered.sum() / n_ok) if n_ok else math.nan,
        coverage_inclusive=float(covered.sum() / len(recs)),
        mean_length=float(lengths.sum() / n_ok) if n_ok else math.nan,
        median_length=float(np.median(lengths)) if n_ok else math.nan,
        failure_count=len(recs) - n_ok,
        ok_count=n_ok,
        indefinite_count=indef,
    )


def _map(fn, items, threads: int):
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_cell(config: SimConfig, threads: int = 1, truth: Optional[Truth] = None) -> CellResult:
    t0 = time.perf_counter()
    truth = gen_truth(config) if truth is None else truth
    cid = config.cell_id
    records = _map(lambda i: run_replication(truth, config, i, cid), range(config.reps), threads)
    summaries = {v: summarize(records, v) for v in config.variants}
    return CellResult(config, summaries, time.perf_counter() - t0, tuple(records))


def run_grid(configs: Sequence[SimConfig], threads: int = 1,
             keep_records: bool = False) -> list:
    """Run cells in input order; a cell whose truth cannot be built yields ``None``."""
    if not configs:
        raise InputError("run_grid needs at least one config")
    out = []
    for cfg in configs:
        try:
            res = run_cell(cfg, threads)
        except EivError:
            out.append(None)
            continue
        if not keep_records:
            res = CellResult(res.config, res.summaries, res.wall_time)
        out.append(res)
    return out


@dataclass(frozen=True)
class RateRule:
    """Ensemble size as a function of p: ``ceil(c log p)`` or ``ceil(c p^exponent)``."""

    kind: str = "logarithmic"
    c: float = 10.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("logarithmic", "polynomial"):
            raise InputError(f"unknown rate rule {self.kind!r}")
        if self.c <= 0:
            raise InputError("rate constant must be positive")

    def ensemble_size(self, p: int) -> int:
        if self.kind == "logarithmic":
            n = self.c * math.log(p)
        else:
            n = self.c * p ** self.exponent
        return max(2, math.ceil(n - 1e-12))


def rate_sweep(ps: Sequence[int], rule: RateRule, base_config: SimConfig,
               threads: int = 1) -> list:
    ps = list(ps)
    if not ps or any(b <= a for a, b in zip(ps, ps[1:])):
        raise InputError("ps must be a nonempty increasing list")
    configs = [replace(base_config, p=p, n=rule.ensemble_size(p)) for p in ps]
    return run_grid(configs, threads)


def coverage_grid(p: int = 572, reps: int = 1000, seed: int = 0, **kw) -> list:
    """The 3 x 3 x 4 design of rho, alpha and ensemble size."""
    return [SimConfig(p=p, rho=rho, alpha=alpha, n=n, reps=reps, seed=seed, **kw)
            for rho in (0.2, 0.4, 0.6)
            for n in (56, 223, 892, INFINITE)
            for alpha in (0.1, 0.3, 0.5)]
