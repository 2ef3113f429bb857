"""Omitted-variable-bias sensitivity analysis for instrumental-variable estimands.

Cross-fitted estimates of the reduced form, first stage and their
sensitivity scale parameters, bias bounds, identified sets for the ratio and
several families of confidence intervals.
"""

__version__ = "0.1.0"

from .model import (
    BoundSet,
    CIReport,
    Dataset,
    Estimand,
    SensitivityConfig,
    ShortEstimates,
    StoyeResult,
    ValidationError,
    read_csv,
    validate,
)
from .learners import LearnerSpec
from .crossfit import crossfit_estimate, repeated_crossfit
from .sensitivity import (
    benchmark_calibrate,
    bias_bound_gamma,
    bias_bound_lambda,
    max_over_groups,
)
from .identify import phi_bounds, theta_bounds
from .stoye import StoyeSolverError, stoye_ci
from .inference import (
    ci_report,
    contour_grid,
    conventional_cis,
    invert_theta_ci,
    robustness_threshold,
    stoye_theta_ci,
)

__all__ = [
    "BoundSet", "CIReport", "Dataset", "Estimand", "SensitivityConfig",
    "ShortEstimates", "StoyeResult", "ValidationError", "read_csv", "validate",
    "LearnerSpec", "crossfit_estimate", "repeated_crossfit",
    "benchmark_calibrate", "bias_bound_gamma", "bias_bound_lambda", "max_over_groups",
    "phi_bounds", "theta_bounds", "StoyeSolverError", "stoye_ci",
    "ci_report", "contour_grid", "conventional_cis", "invert_theta_ci",
    "robustness_threshold", "stoye_theta_ci",
]
