"""Coverage against p when the ensemble grows like c log p or c p^e.

    python3 scripts/rate_sweep.py --rule logarithmic --c 10 --ps 100 200 400
    python3 scripts/rate_sweep.py --rule polynomial --c 1 --exponent 1.5 --ps 50 100 200
"""

import argparse

from eivreg import cli
from eivreg.harness import RateRule, SimConfig, rate_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ps", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--rule", choices=("logarithmic", "polynomial"), default="logarithmic")
    ap.add_argument("--c", type=float, default=10.0)
    ap.add_argument("--exponent", type=float, default=1.0)
    ap.add_argument("--rho", type=float, default=0.2)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    base = SimConfig(p=min(args.ps), rho=args.rho, alpha=args.alpha, reps=args.reps, seed=args.seed)
    res = rate_sweep(args.ps, RateRule(args.rule, args.c, args.exponent), base, args.threads)
    print(cli.emit_table(res, "csv"), end="")


if __name__ == "__main__":
    main()
