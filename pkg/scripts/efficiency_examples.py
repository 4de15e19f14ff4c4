"""AMSE of identity vs inverse-Sigma weighting on the two diagonal designs.

Under the first design identity weighting wins; under x_i^2 = sigma_i^2
inverse-Sigma weighting wins and equals (2 + b^2)/p. Also prints the
optimal diagonal weight's AMSE for comparison.
"""

import argparse

import numpy as np

from eivreg.efficiency import (DiagonalSpec, amse_diag_optimal, amse_example2,
                               design_example2, design_example3_check)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=572)
    ap.add_argument("--beta1", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    s2 = rng.uniform(0.02, 0.18, args.p)
    b = args.beta1
    smax = 1.0 / (1.0 + b ** 2)
    pre, unpre = amse_example2(s2, smax, b)
    opt = amse_diag_optimal(DiagonalSpec(b, design_example2(s2, smax, b), s2))
    print(f"design 1: inverse-Sigma {pre:.6g}  identity {unpre:.6g}  optimal {opt:.6g}")
    pre, unpre = design_example3_check(s2, b)
    opt = amse_diag_optimal(DiagonalSpec(b, np.sqrt(s2), s2))
    print(f"design 2: inverse-Sigma {pre:.6g}  identity {unpre:.6g}  optimal {opt:.6g}"
          f"  (2+b^2)/p = {(2 + b ** 2) / args.p:.6g}")


if __name__ == "__main__":
    main()
