"""Command-line front end.

    eivreg run-cell   --config cell.json  [--seed S] [--threads T] [--out F] [--format csv|markdown]
    eivreg run-grid   --config grid.json  ...
    eivreg rate-sweep --config sweep.json ...
    eivreg amse       --config amse.json  ...
    eivreg certify    --config cert.json  ...

Seed precedence: ``--seed`` > config ``seed`` > ``EIV_SEED`` > 0.
Exit codes: 0 success, 2 configuration error, 3 numerical failure in the
analyzer subcommands. Simulation failures are recorded, never fatal.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import efficiency, perturbation
from .covariance import bandwidth, ensemble_cov, sample_ensemble, taper
from .errors import ConfigError, EivError, InputError
from .estimator import Dataset
from .harness import (INFINITE, RateRule, SimConfig, gen_truth, rate_sweep, run_cell,
                      run_grid, stream)

CSV_COLUMNS = ("rho", "alpha", "n", "variant", "coverage", "mean_length",
               "median_length", "failures", "reps", "seed", "p")

_SIM_KEYS = {"p", "rho", "alpha", "n", "beta1", "sigma_sq_range", "reps", "seed",
             "level", "variants", "prewhiten_policy", "m"}
_LIST_KEYS = ("rho", "alpha", "n")


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def resolve_seed(cli_seed, cfg: dict) -> int:
    if cli_seed is not None:
        return int(cli_seed)
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("EIV_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"EIV_SEED must be an integer, got {env!r}") from exc
    return 0


def _n_value(v):
    if isinstance(v, str):
        if v.lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        raise ConfigError(f"field 'n': expected an integer or \"inf\", got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"field 'n': expected an integer or \"inf\", got {v!r}")
    return int(v)


def expand_sim_configs(cfg: dict, seed=None) -> list:
    """Validated cells from a config dict; list-valued rho/alpha/n expand as a grid."""
    unknown = set(cfg) - _SIM_KEYS - {"ps", "rule", "analysis"}
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    for key in ("p", "beta1", "rho", "alpha"):
        if key not in cfg and not (key == "p" and "ps" in cfg):
            raise ConfigError(f"missing required field '{key}'")
    axes = {}
    for key in _LIST_KEYS:
        v = cfg.get(key, "inf" if key == "n" else None)
        vals = v if isinstance(v, list) else [v]
        if not vals:
            raise ConfigError(f"field '{key}' is an empty list")
        axes[key] = [_n_value(x) for x in vals] if key == "n" else vals
    base = {k: v for k, v in cfg.items() if k in _SIM_KEYS and k not in _LIST_KEYS}
    base["seed"] = resolve_seed(seed, cfg)
    if "sigma_sq_range" in base:
        base["sigma_sq_range"] = tuple(base["sigma_sq_range"])
    if "variants" in base:
        base["variants"] = tuple(base["variants"])
    out = []
    for rho, alpha, n in itertools.product(axes["rho"], axes["alpha"], axes["n"]):
        try:
            out.append(SimConfig(rho=float(rho), alpha=float(alpha), n=n, **base))
        except (InputError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid cell rho={rho}, alpha={alpha}, n={n}: {exc}") from exc
    return out


def parse_config(path, seed=None):
    """Parse a JSON config into simulation cells or an analyzer spec dict."""
    cfg = load_json(path)
    if cfg.get("analysis") in ("amse", "certify"):
        cfg = dict(cfg)
        cfg["seed"] = resolve_seed(seed, cfg)
        return cfg
    return expand_sim_configs(cfg, seed)


def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.3f}"


def result_rows(results):
    rows = []
    for res in results:
        if res is None:
            continue
        for variant in res.config.variants:
            r = res.row(variant)
            rows.append({
                "rho": repr(float(r["rho"])), "alpha": repr(float(r["alpha"])),
                "n": r["n"], "variant": variant,
                "coverage": _fmt(100.0 * r["coverage_rate"]),
                "mean_length": _fmt(r["mean_length"]),
                "median_length": _fmt(r["median_length"]),
                "failures": str(r["failure_count"]), "reps": str(r["reps"]),
                "seed": str(r["seed"]), "p": str(r["p"]),
            })
    return rows


def format_csv(results) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(result_rows(results))
    return buf.getvalue()


def format_markdown(results) -> str:
    """Coverage/length blocks: one rho block, two rows per n, a column pair per alpha."""
    res = [r for r in results if r is not None]
    rhos = sorted({r.config.rho for r in res})
    alphas = sorted({r.config.alpha for r in res})
    ns = sorted({r.config.n for r in res})
    variants = [v for v in ("unprewhitened", "prewhitened")
                if any(v in r.summaries for r in res)]
    short = {"unprewhitened": "beta(I)", "prewhitened": "beta(inv Sigma_hat)"}
    cells = {(r.config.rho, r.config.alpha, r.config.n): r for r in res}
    header = ["rho", "n"] + [f"alpha={a} {short[v]}" for a in alphas for v in variants]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for rho in rhos:
        for n in ns:
            cov, lng = [str(rho), "inf" if n == INFINITE else str(n)], ["", ""]
            for a in alphas:
                for v in variants:
                    c = cells.get((rho, a, n))
                    s = c.summaries.get(v) if c else None
                    cov.append(f"{_fmt(100 * s.coverage_rate)}%" if s else "")
                    lng.append(f"({_fmt(s.mean_length)})" if s else "")
            lines.append("| " + " | ".join(cov) + " |")
            lines.append("| " + " | ".join(lng) + " |")
    return "\n".join(lines) + "\n"


def emit_table(results, fmt: str = "csv", path=None) -> str:
    if not results or all(r is None for r in results):
        raise InputError("no results to emit")
    if fmt == "csv":
        text = format_csv(results)
    elif fmt == "markdown":
        text = format_markdown(results)
    else:
        raise InputError(f"unknown format {fmt!r}")
    if path is not None:
        _write(text, path)
    return text


def _write(text: str, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def read_csv_table(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


# analyzer subcommands

def _sigma_sq_from(cfg: dict, rng) -> np.ndarray:
    if "sigma_sq" in cfg:
        return np.asarray(cfg["sigma_sq"], dtype=float)
    if "p" not in cfg:
        raise ConfigError("amse config needs 'sigma_sq' or 'p'")
    lo, hi = cfg.get("sigma_sq_range", (0.02, 0.18))
    return rng.uniform(lo, hi, size=int(cfg["p"]))


def run_amse(cfg: dict) -> list:
    """AMSE of identity, inverse-Sigma, optimal and optional custom diagonal weights."""
    rng = stream(cfg["seed"], 0xA35E)
    beta1 = float(cfg.get("beta1", 2.0))
    s2 = _sigma_sq_from(cfg, rng)
    design = cfg.get("design", "identity_optimal")
    if design == "identity_optimal":
        smax = float(cfg.get("sigma_max_sq", 1.0 / (1.0 + beta1 ** 2)))
        x = efficiency.design_example2(s2, smax, beta1)
    elif design == "variance_matched":
        x = np.sqrt(s2)
    elif design == "custom":
        if "x" not in cfg:
            raise ConfigError("custom design needs 'x'")
        x = np.asarray(cfg["x"], dtype=float)
    else:
        raise ConfigError(f"unknown design {design!r}")
    spec = efficiency.DiagonalSpec(beta1, x, s2)
    weights = {"identity": np.ones_like(s2), "inverse_sigma": 1.0 / s2,
               "optimal": efficiency.optimal_diag_weight(spec)}
    if "weights" in cfg:
        weights["custom"] = np.asarray(cfg["weights"], dtype=float)
    rows = []
    for name, a in weights.items():
        rows.append({"weighting": name, "amse": efficiency.amse_diag(spec.with_weights(a))})
    rows.append({"weighting": "bound", "amse": efficiency.amse_diag_optimal(spec)})
    return rows


def _matrix(cfg, key):
    return np.asarray(cfg[key], dtype=float)


def run_certify(cfg: dict) -> list:
    """Perturbation certificates, for explicit (Z, y, A, B) or a simulated draw."""
    if "A" in cfg:
        for key in ("Z", "y", "B"):
            if key not in cfg:
                raise ConfigError(f"explicit certify config needs '{key}'")
        data = Dataset(_matrix(cfg, "Z"), _matrix(cfg, "y"))
        reports = {"explicit": perturbation.certify_tls_perturbation(
            data, _matrix(cfg, "A"), _matrix(cfg, "B"), label="explicit")}
        diag = None
    else:
        for key in ("p", "rho", "alpha", "n"):
            if key not in cfg:
                raise ConfigError(f"simulated certify config needs '{key}'")
        sim = SimConfig(p=int(cfg["p"]), rho=float(cfg["rho"]), alpha=float(cfg["alpha"]),
                        n=_n_value(cfg["n"]), beta1=float(cfg.get("beta1", 2.0)),
                        sigma_sq_range=tuple(cfg.get("sigma_sq_range", (0.02, 0.18))),
                        seed=cfg["seed"], reps=1)
        truth = gen_truth(sim)
        rng = stream(sim.seed, 0xCE27)
        p = sim.p
        eps, u = (truth.chol @ rng.standard_normal((p, 2))).T
        data = Dataset((truth.x + u)[:, None], truth.beta1 * truth.x + eps)
        if sim.infinite:
            sigma_hat = truth.sigma
        else:
            ens = sample_ensemble(truth.chol, sim.n, rng)
            sigma_hat = taper(ensemble_cov(ens), bandwidth(sim.n, sim.alpha)).sigma_hat
        reports = perturbation.certify_prewhitening(data, truth.sigma, sigma_hat)
        diag = perturbation.prewhitening_diagnostic(truth.sigma, sigma_hat)
    rows = []
    for label, rep in reports.items():
        if rep is None:
            rows.append({"label": label, "applicable": "n/a"})
            continue
        rows.append({
            "label": label, "delta": rep.delta, "delta_hat": rep.delta_hat, "ub": rep.ub,
            "applicable": rep.applicable, "bound_diff": rep.bound_diff,
            "measured_diff": rep.measured_diff, "bound_norm": rep.bound_norm,
            "measured_norm": rep.measured_norm, "holds": rep.holds,
        })
    if diag is not None:
        rows.append({"label": "sqrt(p)*|Sigma|*|inv(Sigma_hat)-inv(Sigma)|", "value": diag})
    return rows


def format_records(rows: list, fmt: str) -> str:
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([cell(r.get(k)) for k in keys])
        return buf.getvalue()
    lines = ["| " + " | ".join(keys) + " |", "|" + "---|" * len(keys)]
    for r in rows:
        lines.append("| " + " | ".join(cell(r.get(k)) for k in keys) + " |")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eivreg", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run-cell", "run-grid", "rate-sweep", "amse", "certify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1, help="0 = one per CPU")
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("csv", "markdown"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("amse", "certify"):
            cfg = load_json(args.config)
            cfg["seed"] = resolve_seed(args.seed, cfg)
            try:
                rows = run_amse(cfg) if args.command == "amse" else run_certify(cfg)
            except ConfigError:
                raise
            except (EivError, np.linalg.LinAlgError) as exc:
                print(f"eivreg: numerical failure: {exc}", file=sys.stderr)
                return 3
            _write(format_records(rows, args.format), args.out)
            return 0

        cfg = load_json(args.config)
        if args.command == "rate-sweep":
            if "ps" not in cfg:
                raise ConfigError("rate-sweep config needs 'ps'")
            rule_cfg = cfg.get("rule", {})
            try:
                rule = RateRule(**rule_cfg)
            except (InputError, TypeError) as exc:
                raise ConfigError(f"field 'rule': {exc}") from exc
            body = {k: v for k, v in cfg.items() if k not in ("ps", "rule")}
            body.setdefault("p", min(cfg["ps"]))
            base = expand_sim_configs(body, args.seed)
            if len(base) != 1:
                raise ConfigError("rate-sweep base config must describe a single cell")
            try:
                results = rate_sweep(cfg["ps"], rule, base[0], threads=args.threads)
            except InputError as exc:
                raise ConfigError(str(exc)) from exc
        else:
            configs = expand_sim_configs(cfg, args.seed)
            if args.command == "run-cell":
                if len(configs) != 1:
                    raise ConfigError(f"run-cell expects one cell, config expands to {len(configs)}")
                results = [run_cell(configs[0], threads=args.threads)]
            else:
                results = run_grid(configs, threads=args.threads)
        emit_table(results, args.format, args.out or "-")
        return 0
    except ConfigError as exc:
        print(f"eivreg: config error: {exc}", file=sys.stderr)
        return 2
    except EivError as exc:
        print(f"eivreg: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
