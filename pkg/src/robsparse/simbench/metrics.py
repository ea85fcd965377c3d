"""Prediction accuracy and support-recovery rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import Dataset, ErrorLaw

__all__ = ["Metrics", "metrics", "fnr", "fpr"]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    fnr: float
    fpr: float


def fnr(coef, beta0) -> float:
    """Share of truly non-zero coefficients estimated as exactly zero."""
    coef, beta0 = np.asarray(coef), np.asarray(beta0)
    active = beta0 != 0
    if not active.any():
        return 0.0
    return float(np.mean(coef[active] == 0))


def fpr(coef, beta0) -> float:
    """Share of truly zero coefficients estimated as non-zero."""
    coef, beta0 = np.asarray(coef), np.asarray(beta0)
    inactive = beta0 == 0
    if not inactive.any():
        return 0.0
    return float(np.mean(coef[inactive] != 0))


def metrics(intercept: float, coef, test: Dataset, beta0,
            error_law: ErrorLaw = ErrorLaw.NORMAL) -> Metrics:
    if test.n == 0:
        raise ValueError("empty test set")
    resid = test.y - intercept - test.X @ np.asarray(coef)
    if ErrorLaw(error_law).accuracy_metric == "MAD":
        acc = float(np.median(np.abs(resid)))
    else:
        acc = float(np.sqrt(np.mean(resid**2)))
    return Metrics(acc, fnr(coef, beta0), fpr(coef, beta0))
