"""Median/MAD column standardisation and the back-transformation of fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError
from .scale import MAD_CONSTANT

__all__ = ["Standardization", "standardize", "destandardize", "identity_standardization"]


@dataclass(frozen=True)
class Standardization:
    """Record of the transform applied by :func:`standardize`.

    ``col_center`` and ``col_scale`` have one entry per *original* column;
    columns flagged in ``dropped`` were constant and are absent from the
    standardised design.
    """

    col_center: np.ndarray
    col_scale: np.ndarray
    y_center: float
    has_intercept: bool
    dropped: np.ndarray

    @property
    def kept(self) -> np.ndarray:
        return ~self.dropped

    @property
    def n_features(self) -> int:
        return self.col_center.shape[0]


def identity_standardization(p: int, has_intercept: bool = True) -> Standardization:
    return Standardization(
        col_center=np.zeros(p),
        col_scale=np.ones(p),
        y_center=0.0,
        has_intercept=has_intercept,
        dropped=np.zeros(p, dtype=bool),
    )


def standardize(X, y, fit_intercept: bool = True):
    """Center columns by the median and scale by the normalised MAD.

    The response is median-centred.  Columns with zero MAD are dropped and
    recorded in the returned :class:`Standardization`.  Without an intercept
    nothing is centred, columns are only scaled.

    Returns
    -------
    X_std : ndarray (n, p_kept)
    y_std : ndarray (n,)
    std : Standardization
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with as many rows as y")
    if X.shape[0] < 2:
        raise ValueError("standardize needs at least 2 observations")

    med = np.median(X, axis=0)
    mad = np.median(np.abs(X - med), axis=0) * MAD_CONSTANT
    dropped = ~(mad > 0)
    if dropped.all():
        raise DegenerateDataError("every column of X has zero MAD")
    center = med if fit_intercept else np.zeros_like(med)
    scale = np.where(dropped, 1.0, mad)
    y_center = float(np.median(y)) if fit_intercept else 0.0

    X_std = (X[:, ~dropped] - center[~dropped]) / scale[~dropped]
    std = Standardization(
        col_center=np.where(dropped, 0.0, center),
        col_scale=scale,
        y_center=y_center,
        has_intercept=fit_intercept,
        dropped=dropped,
    )
    return X_std, y - y_center, std


def destandardize(intercept_std: float, coef_std, std: Standardization):
    """Map coefficients on the standardised scale back to original coordinates.

    ``coef_std`` has one entry per kept column.  Dropped columns receive an
    exact zero.
    """
    coef_std = np.asarray(coef_std, dtype=np.float64).ravel()
    kept = std.kept
    if coef_std.shape[0] != kept.sum():
        raise ValueError(
            f"expected {kept.sum()} standardised coefficients, got {coef_std.shape[0]}"
        )
    coef = np.zeros(std.n_features)
    coef[kept] = coef_std / std.col_scale[kept]
    intercept = float(intercept_std) + std.y_center - float(coef @ std.col_center)
    if not std.has_intercept:
        intercept = 0.0
    return intercept, coef
