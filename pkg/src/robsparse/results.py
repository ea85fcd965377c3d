"""Plain result containers shared by the fitting routines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitResult", "CvResult"]


@dataclass
class FitResult:
    """Outcome of a single fit.

    ``coef`` and ``intercept`` are in the coordinates of the data the routine
    was given; the estimator classes map them back to the caller's scale.
    ``scale`` is the residual M-scale that entered the fit (for MM-type fits,
    the frozen scale of the initial estimate).
    """

    intercept: float
    coef: np.ndarray
    scale: float
    penalty: float
    iterations: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    converged: bool = True

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1]) if self.objective_trace.size else float("nan")

    @property
    def params(self) -> np.ndarray:
        """Intercept followed by the slopes."""
        return np.concatenate([[self.intercept], self.coef])

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=np.float64) @ self.coef


@dataclass
class CvResult:
    """Cross-validated selection of a penalty level."""

    candidates: np.ndarray
    criterion: np.ndarray  # inf marks a disqualified candidate
    selected: float
    selected_index: int
    failures: np.ndarray

    def as_dict(self) -> dict:
        return {
            "candidates": self.candidates.tolist(),
            "criterion": [float(c) if np.isfinite(c) else None for c in self.criterion],
            "selected": float(self.selected),
            "failures": self.failures.tolist(),
        }
