"""Weighted total least squares for errors-in-variables regression with dependent errors."""

from .covariance import (CovarianceModel, Ensemble, TaperedEstimate, bandwidth, build_sigma,
                         ensemble_cov, sample_ensemble, taper, taper_weight, trace_ratios)
from .efficiency import (DiagonalSpec, amse_diag, amse_weighted, design_example2,
                         design_example3_check, optimal_diag_weight)
from .estimator import (Dataset, EivFit, QStats, Weighting, confidence_intervals,
                        fit_prewhitened, fit_unprewhitened, plug_in_omega, q_stats, tls_fit)
from .harness import (INFINITE, CellResult, RateRule, SimConfig, gen_truth, rate_sweep,
                      run_cell, run_grid, run_replication)
from .linalg import (cholesky_lower, normal_quantile, solve_spd, spectral_norm, sym_eigen)
from .perturbation import (certify_tls_perturbation, delta, delta_hat,
                           inversion_perturbation_check, ub_norm, weyl_gap_check)

__version__ = "0.1.0"
