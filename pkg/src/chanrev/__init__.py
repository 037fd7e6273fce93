"""chanrev: reversibility and sufficiency of quantum channels."""

from .algebra import (
    AlgebraBasis, BlockStructure, commutant, generated_algebra, structure_decomposition,
    trace_conditional_expectation,
)
from .channels import (
    Channel, DensityOperator, PositivityReport, petz_dual, petz_recovery, positivity_report,
)
from .divergences import OperatorConvexFunction, f_divergence, relative_entropy
from .errors import ChanrevError
from .fisher import MonotoneFunction, chi2_divergence, fisher_metric, metric_inverse_apply
from .reversibility import (
    CheckOptions, ReversibilityReport, check_conditions, factorize, fixed_point_algebra,
    rn_derivative,
)
from .testing import bayes_error, chernoff, hoeffding, hoeffding_threshold, np_test

__version__ = "0.1.0"

__all__ = [
    "AlgebraBasis", "BlockStructure", "Channel", "ChanrevError", "CheckOptions",
    "DensityOperator", "MonotoneFunction", "OperatorConvexFunction", "PositivityReport",
    "ReversibilityReport", "bayes_error", "check_conditions", "chernoff", "chi2_divergence",
    "commutant", "f_divergence", "factorize", "fisher_metric", "fixed_point_algebra",
    "generated_algebra", "hoeffding", "hoeffding_threshold", "metric_inverse_apply",
    "np_test", "petz_dual", "petz_recovery", "positivity_report", "relative_entropy",
    "rn_derivative", "structure_decomposition", "trace_conditional_expectation",
]
