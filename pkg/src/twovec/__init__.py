"""Closed-form two-vector quaternion attitude estimation with error analysis."""

from . import quat
from .estimator import (
    EstimateResult,
    EstimatorConfig,
    SingularCase,
    VectorObservation,
    classify,
    estimate,
    estimate_raw,
)
from .exceptions import AttitudeError

__all__ = [
    "AttitudeError",
    "EstimateResult",
    "EstimatorConfig",
    "SingularCase",
    "VectorObservation",
    "classify",
    "estimate",
    "estimate_raw",
    "quat",
]
__version__ = "0.1.0"
