"""Non-robust and oracle comparators for the benchmark.

``LSLasso`` and ``AdaptiveLSLasso`` are the least-squares special case of the
weighted lasso solver (unit weights) with squared-error cross-validation.  The
oracle fits see only the true support.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .._cv import kfold_indices, select_min
from ..estimators import MMLasso
from ..pwls import orthogonalize_intercept, recover_intercept, solve_weighted_lasso
from ..validation import as_generator, validate_data, validate_predict_data

__all__ = ["LSLasso", "AdaptiveLSLasso", "oracle_ls", "oracle_mm", "oracle_tml",
           "lasso_path"]


def lasso_path(X, y, lambdas):
    """LS-Lasso ``0.5 ||y - a - Xb||^2 + lam ||b||_1`` along ``lambdas``.

    Solutions are warm-started from the previous grid value, so ``lambdas``
    should be decreasing.  Returns ``(intercepts, coefs)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    k = np.ones(n)
    eta, Xp = orthogonalize_intercept(k, X)
    beta = np.zeros(p)
    intercepts = np.empty(len(lambdas))
    coefs = np.empty((len(lambdas), p))
    for i, lam in enumerate(lambdas):
        beta = solve_weighted_lasso(Xp, y, lam, warm_start=beta)
        intercepts[i] = recover_intercept(k, eta, y, beta)
        coefs[i] = beta
    return intercepts, coefs


def _mean_sd(X, y):
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    keep = scale > 0
    return center, np.where(keep, scale, 1.0), keep


class LSLasso(RegressorMixin, BaseEstimator):
    """Least-squares lasso with k-fold squared-error cross-validation.

    Carriers are standardised by mean and standard deviation unless
    ``standardize=False``.  ``lam`` is on the scale actually fitted; ``None``
    selects it from ``n_grid`` log-spaced values between ``lam_max`` and
    ``eps * lam_max``.
    """

    def __init__(self, lam=None, n_grid=50, eps=1e-3, folds=5, random_state=None,
                 standardize=True):
        self.lam = lam
        self.standardize = standardize
        self.n_grid = n_grid
        self.eps = eps
        self.folds = folds
        self.random_state = random_state

    def _grid(self, Xs, y):
        lam_max = np.max(np.abs((Xs - Xs.mean(0)).T @ (y - y.mean())))
        if not lam_max > 0:
            return np.array([0.0])
        return lam_max * np.logspace(0.0, np.log10(self.eps), self.n_grid)

    def _cv(self, Xs, y, grid, rng):
        n = Xs.shape[0]
        sse = np.zeros(grid.size)
        for test in kfold_indices(n, self.folds, rng):
            train = np.setdiff1d(np.arange(n), test)
            a, B = lasso_path(Xs[train], y[train], grid)
            pred = a[:, None] + B @ Xs[test].T
            sse += np.sum((y[test][None, :] - pred) ** 2, axis=1)
        return sse

    def fit(self, X, y):
        X, y = validate_data(X, y, min_samples=2 * self.folds)
        center, scale, keep = _mean_sd(X, y)
        if not self.standardize:
            scale = np.ones_like(scale)
        Xs = ((X - center) / scale)[:, keep]
        rng = as_generator(self.random_state)
        if self.lam is None:
            grid = self._grid(Xs, y)
            self.cv_criterion_ = self._cv(Xs, y, grid, rng)
            idx = select_min(self.cv_criterion_, prefer="first")
            self.lambda_grid_ = grid
            lam_path = grid[:idx + 1]
        else:
            lam_path = np.array([float(self.lam)])
        a, B = lasso_path(Xs, y, lam_path)
        self.lambda_ = float(lam_path[-1])
        coef_std = np.zeros(X.shape[1])
        coef_std[keep] = B[-1]
        self.coef_std_ = coef_std
        self.coef_ = coef_std / scale
        self.intercept_ = float(a[-1] - center[keep] @ (B[-1] / scale[keep]))
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.intercept_ + validate_predict_data(self, X) @ self.coef_


class AdaptiveLSLasso(LSLasso):
    """Adaptive LS-Lasso: penalty weights are reciprocals of a pilot LS-Lasso."""

    def fit(self, X, y):
        X, y = validate_data(X, y, min_samples=2 * self.folds)
        rng = as_generator(self.random_state)
        pilot_rng, rng2 = rng.spawn(2)
        self.pilot_ = LSLasso(n_grid=self.n_grid, eps=self.eps, folds=self.folds,
                              random_state=pilot_rng).fit(X, y)
        center, scale, _ = _mean_sd(X, y)
        w = np.abs(self.pilot_.coef_std_)
        keep = w > 0
        self.n_features_in_ = X.shape[1]
        self.coef_ = np.zeros(X.shape[1])
        if not keep.any():
            self.intercept_ = float(np.mean(y))
            self.lambda_ = 0.0
            return self
        Xh = ((X - center) / scale)[:, keep] * w[keep]
        inner = LSLasso(lam=self.lam, n_grid=self.n_grid, eps=self.eps, folds=self.folds,
                        random_state=rng2, standardize=False).fit(Xh, y)
        self.lambda_ = inner.lambda_
        self.coef_[keep] = inner.coef_ * w[keep] / scale[keep]
        self.intercept_ = float(inner.intercept_ - center[keep] @ self.coef_[keep])
        return self


def _support_design(X, support):
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise ValueError("the oracle needs a non-empty support")
    return np.asarray(X, dtype=np.float64)[:, support], support


def _embed(p, support, coef):
    out = np.zeros(p)
    out[support] = coef
    return out


def oracle_ls(X, y, support):
    """Least squares on the true support; returns ``(intercept, coef)``."""
    Xs, support = _support_design(X, support)
    A = np.column_stack([np.ones(Xs.shape[0]), Xs])
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise np.linalg.LinAlgError("singular restricted design")
    return float(sol[0]), _embed(X.shape[1], support, sol[1:])


def oracle_mm(X, y, support, random_state=None):
    """Unpenalised MM-estimator (85% efficiency) on the true support."""
    Xs, support = _support_design(X, support)
    est = MMLasso(lam=0.0, gamma=0.0, random_state=random_state).fit(Xs, y)
    return float(est.intercept_), _embed(X.shape[1], support, est.coef_)


def oracle_tml(X, y, support, df: float, random_state=None):
    """Student-t maximum likelihood (known ``df``) on the true support.

    Started from the robust oracle; the log-scale is estimated jointly.
    """
    Xs, support = _support_design(X, support)
    a0, b0 = oracle_mm(Xs, y, np.arange(Xs.shape[1]), random_state)
    r0 = y - a0 - Xs @ b0
    s0 = max(np.median(np.abs(r0)), 1e-8)
    A = np.column_stack([np.ones(Xs.shape[0]), Xs])

    def nll(theta):
        coef, log_s = theta[:-1], theta[-1]
        return -np.sum(stats.t.logpdf(y - A @ coef, df, scale=np.exp(log_s)))

    theta0 = np.concatenate([[a0], b0, [np.log(s0)]])
    res = optimize.minimize(nll, theta0, method="BFGS")
    theta = res.x if np.all(np.isfinite(res.x)) and res.fun <= nll(theta0) else theta0
    return float(theta[0]), _embed(X.shape[1], support, theta[1:-1])
