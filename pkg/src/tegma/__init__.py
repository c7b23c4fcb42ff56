"""Sparse per-mode precision estimation for tensor-valued data.

Implements a sign-based robust separate estimator (SSS) for the
Kronecker factors of an elliptical tensor distribution's precision
matrix, plus mean-based separate (Sep) and cyclic (Cyc) baselines,
along with the simulation designs, tuning, and evaluation metrics used
to compare them.
"""

from .estimators import (EstimatorSpec, ModeSolveError, PrecisionSet,
                         estimate, estimate_cyc, estimate_sep, estimate_sss,
                         sign_pattern, threshold_precision)
from .evaluation import (LossReport, SupportReport, TuneResult,
                         lemma_sk_gap, mode_losses, population_target,
                         support_metrics, tune, validation_loss)
from .glasso import SolverOptions, SolverResult, graphical_lasso
from .robust import (CenterEstimate, SignScatter, mode_mean_matrix,
                     mode_sign_matrix, spatial_median, spatial_sign)
from .simulation import (DistSpec, GroundTruth, make_model, sample,
                         sub_seed)
from .tensor_ops import (NotPositiveDefiniteError, fold, kron, mode_product,
                         multi_mode_product, unfold, unvectorize, vectorize)

__version__ = "0.1.0"

__all__ = [
    "CenterEstimate", "DistSpec", "EstimatorSpec", "GroundTruth",
    "LossReport", "ModeSolveError", "NotPositiveDefiniteError",
    "PrecisionSet", "SignScatter", "SolverOptions", "SolverResult",
    "SupportReport", "TuneResult", "estimate", "estimate_cyc",
    "estimate_sep", "estimate_sss", "fold", "graphical_lasso", "kron",
    "lemma_sk_gap", "make_model", "mode_losses", "mode_mean_matrix",
    "mode_product", "mode_sign_matrix", "multi_mode_product",
    "population_target", "sample", "sign_pattern", "spatial_median",
    "spatial_sign", "sub_seed", "support_metrics", "threshold_precision",
    "tune", "unfold", "unvectorize", "validation_loss", "vectorize",
]
