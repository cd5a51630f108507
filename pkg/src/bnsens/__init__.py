"""Single-pass sensitivity analysis for discrete Bayesian networks."""

from .bif_io import BifDocument, parse_bif, read_bif, serialize_bif, to_network, write_bif
from .engine import backward, elimination_order, marginalize
from .model import (
    BayesianNetwork,
    Mrf,
    ParameterId,
    Potential,
    apply_covariation,
    covariation_siblings,
    impose_evidence,
    moralize,
    validate,
)
from .multiway import PairScore, TwoWayFunction, fit_two_way, sv_max, top_k_pairs
from .oneway import (
    Query,
    SensitivityFunction,
    SensitivityReport,
    admissible_region,
    analyze,
    metrics,
    numerator_coefficients,
    run_analysis,
    sensitivity_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "BayesianNetwork", "BifDocument", "Mrf", "PairScore", "ParameterId", "Potential", "Query",
    "SensitivityFunction", "SensitivityReport", "TwoWayFunction", "admissible_region", "analyze",
    "apply_covariation", "backward", "covariation_siblings", "elimination_order",
    "fit_two_way", "impose_evidence", "marginalize", "metrics", "moralize",
    "numerator_coefficients", "parse_bif", "read_bif", "run_analysis",
    "sensitivity_coefficients", "serialize_bif", "sv_max", "to_network", "top_k_pairs",
    "validate", "write_bif",
]
