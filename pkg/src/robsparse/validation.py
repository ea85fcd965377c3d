"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .kernels import C0_DEFAULT, C1_DEFAULT, RhoSpec


def validate_data(X, y, *, min_samples=2):
    """Training data as float64 arrays, rejecting NaN/inf and too-small samples."""
    if y is None:
        raise ValueError("this estimator requires y to be passed, but the target y is None")
    X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True,
                     ensure_min_samples=min_samples)
    return X, y


def validate_predict_data(estimator, X):
    """Prediction input with the feature count seen during ``fit``."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    expected = estimator.n_features_in_
    if X.shape[1] != expected:
        raise ValueError(f"X has {X.shape[1]} features, but {type(estimator).__name__} "
                         f"is expecting {expected} features as input")
    return X


def resolve_kernels(c0, c1):
    """RhoSpecs for the scale and efficiency kernels; ``c1 >= c0`` is required."""
    rho0 = RhoSpec(C0_DEFAULT if c0 is None else float(c0))
    rho1 = RhoSpec(C1_DEFAULT if c1 is None else float(c1))
    if rho1.c < rho0.c:
        raise ValueError(
            f"c1={rho1.c:g} is smaller than c0={rho0.c:g}; rho1 <= rho0 needs c1 >= c0"
        )
    return rho0, rho1


def as_generator(random_state) -> np.random.Generator:
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)
