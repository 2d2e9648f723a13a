"""Gaussian conditional random fields fitted by steepest descent or ADMM."""

from .core import (
    Dataset,
    DimensionError,
    ModelParams,
    NotPositiveDefiniteError,
    SufficientStats,
    closed_form_mle,
    compute_stats,
    gradients,
    log_det_pd,
    objective,
    predict,
)
from .gd import FitResult, SolverConfig, TraceRecord, fit_gd, line_search, soft_threshold
from .admm import AdmmState, fit_admm

__all__ = [
    "AdmmState",
    "Dataset",
    "DimensionError",
    "FitResult",
    "ModelParams",
    "NotPositiveDefiniteError",
    "SolverConfig",
    "SufficientStats",
    "TraceRecord",
    "closed_form_mle",
    "compute_stats",
    "fit_admm",
    "fit_gd",
    "gradients",
    "line_search",
    "log_det_pd",
    "objective",
    "predict",
    "soft_threshold",
]
