"""Robust sparse linear regression: S-Ridge, MM-Lasso and adaptive MM-Lasso."""
from .asymptotics import asymptotic_constants, oracle_covariance
from .estimators import AdaptiveMMLasso, MMLasso, SRidge
from .exceptions import ConvergenceError, DegenerateDataError
from .kernels import RhoSpec, tune_for_efficiency, tune_for_scale_consistency
from .results import CvResult, FitResult
from .scale import mscale, tau_scale

__version__ = "0.1.0"

__all__ = [
    "SRidge", "MMLasso", "AdaptiveMMLasso",
    "RhoSpec", "tune_for_scale_consistency", "tune_for_efficiency",
    "mscale", "tau_scale",
    "asymptotic_constants", "oracle_covariance",
    "FitResult", "CvResult",
    "ConvergenceError", "DegenerateDataError",
    "__version__",
]
