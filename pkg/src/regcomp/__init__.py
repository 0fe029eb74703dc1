"""Compliance measures of convex regularizers for low-dimensional models."""

__version__ = "0.1.0"

from .models import (
    EigenDecomposition,
    Levels,
    LowRankSym,
    ModelSet,
    NumericalError,
    Point,
    Sparse,
    SymMatrix,
    Vector,
    eig_sym,
    hilbert_norm,
    model_norm,
    model_norm_oracle,
    project_model,
    secant_model,
)
from .regularizers import (
    FiniteAtomic,
    GaugeCertificate,
    LevelsL1,
    Nuclear,
    Regularizer,
    WeightedL1,
    build_descent_vector,
    descent_direction_test,
    evaluate,
    gauge_lp,
    in_descent_cone,
)
from .compliance import (
    BStarResult,
    ComplianceReport,
    b_measure_value,
    b_star_sparse,
    b_sup_estimate,
    compliance_report,
    d_measure_value,
    d_sup_structured,
    delta_suff_l1,
    gamma_nec_point,
    restricted_conditioning,
    rip_constant,
    rip_rc_convert,
)
from .levels import (
    LevelsOptimum,
    LevelsWeights,
    b_levels_bound,
    b_levels_oracle,
    g1,
    h1_H1,
    optimal_weights,
    sweep_levels,
)
from .montecarlo import VolumeEstimate, estimate_anu, estimate_au, experiment_3d_1sparse

__all__ = [name for name in dir() if not name.startswith("_")]
