"""scikit-learn compatible estimators: S-Ridge, MM-Lasso, adaptive MM-Lasso.

All three standardise the carriers by median / normalised MAD and the
response by its median, fit on that scale and report ``coef_`` and
``intercept_`` in the original coordinates.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .mmlasso import MMLassoConfig, fit_adaptive_mmlasso, fit_mmlasso
from .preprocess import destandardize, standardize
from .results import FitResult
from .sridge import SRidgeConfig, cv_sridge, fit_sridge
from .tuning import N_GRID, cv_mmlasso, estimate_lambda_max, make_grid
from .validation import as_generator, resolve_kernels, validate_data, validate_predict_data

__all__ = ["SRidge", "MMLasso", "AdaptiveMMLasso"]


class _RobustLinearModel(RegressorMixin, BaseEstimator):

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.intercept_ + validate_predict_data(self, X) @ self.coef_

    def _set_coefficients(self, fit: FitResult):
        self.intercept_, self.coef_ = destandardize(fit.intercept, fit.coef, self.standardization_)
        self.n_features_in_ = self.coef_.shape[0]

    def _sridge_config(self, rho0):
        return SRidgeConfig(
            rho0=rho0, b=self.b, n_starts=self.n_starts,
            gamma_grid=None if self.gamma_grid is None else tuple(self.gamma_grid),
            folds=self.folds,
        )

    def _fit_initial(self, X, y, cfg, rng):
        """S-Ridge on standardised data, penalty fixed or cross-validated."""
        cv_rng, fit_rng = rng.spawn(2)
        self._sridge_cfg = cfg
        if self.gamma is None:
            self.gamma_cv_ = cv_sridge(X, y, cfg, cv_rng)
            gamma = self.gamma_cv_.selected
        else:
            self.gamma_cv_ = None
            gamma = float(self.gamma)
        self.gamma_ = gamma
        return fit_sridge(X, y, gamma, cfg, fit_rng)


class SRidge(_RobustLinearModel):
    """Ridge-penalised S-estimator of regression.

    Parameters
    ----------
    gamma : float or None
        Ridge penalty on the standardised scale; ``None`` selects it by robust
        k-fold cross-validation over ``gamma_grid``.
    c0 : float or None
        Bisquare tuning constant of the M-scale (default: consistent at the
        normal for ``b``).
    b : float
        Right-hand side of the M-scale equation.
    n_starts : int
        Number of IRLS starts (one ridge start plus random subsamples).
    gamma_grid : array-like or None
        Candidate penalties for cross-validation.
    folds : int
    random_state : int, Generator or None
    fit_intercept : bool
    """

    def __init__(self, gamma=None, c0=None, b=0.5, n_starts=20, gamma_grid=None,
                 folds=5, random_state=None, fit_intercept=True):
        self.gamma = gamma
        self.c0 = c0
        self.b = b
        self.n_starts = n_starts
        self.gamma_grid = gamma_grid
        self.folds = folds
        self.random_state = random_state
        self.fit_intercept = fit_intercept

    def _needs_cv(self):
        return self.gamma is None

    def fit(self, X, y):
        X, y = validate_data(X, y, min_samples=2 * self.folds if self._needs_cv() else 2)
        rho0, _ = resolve_kernels(self.c0, None)
        Xs, ys, self.standardization_ = standardize(X, y, self.fit_intercept)
        rng = as_generator(self.random_state)
        self.fit_ = self._fit_initial(Xs, ys, self._sridge_config(rho0), rng)
        self._set_coefficients(self.fit_)
        self.scale_ = self.fit_.scale
        self.n_iter_ = self.fit_.iterations
        return self


class MMLasso(_RobustLinearModel):
    """MM-Lasso: l1-penalised MM-estimator started from S-Ridge.

    Parameters
    ----------
    lam : float or None
        Penalty in the MM-objective parameterisation (standardised scale).
        ``None`` selects it by robust CV over a grid of ``n_grid`` equally
        spaced values in ``[0, lambda_max]``.
    gamma : float or None
        S-Ridge penalty of the initial estimate; ``None`` cross-validates it.
    c0, c1 : float or None
        Bisquare constants of the scale and efficiency kernels (defaults give
        a normal-consistent scale with b=0.5 and 85% normal efficiency).
    delta : float
        Relative-change tolerance of the IRLS.
    """

    def __init__(self, lam=None, gamma=None, c0=None, c1=None, b=0.5, delta=1e-4,
                 max_iter=500, n_grid=N_GRID, folds=5, n_starts=20, gamma_grid=None,
                 random_state=None, fit_intercept=True):
        self.lam = lam
        self.gamma = gamma
        self.c0 = c0
        self.c1 = c1
        self.b = b
        self.delta = delta
        self.max_iter = max_iter
        self.n_grid = n_grid
        self.folds = folds
        self.n_starts = n_starts
        self.gamma_grid = gamma_grid
        self.random_state = random_state
        self.fit_intercept = fit_intercept

    def _mm_config(self, rho1):
        return MMLassoConfig(rho1=rho1, delta=self.delta, max_iter=self.max_iter)

    def _fold_init(self, Xs, ys, rng, to_start=None):
        """Per-fold S-Ridge at the selected gamma, refitted on training rows."""
        seeds = iter(rng.spawn(self.folds))

        def fold_init(train):
            init = fit_sridge(Xs[train], ys[train], self.gamma_, self._sridge_cfg, next(seeds))
            start = (init.intercept, init.coef) if to_start is None else to_start(init)
            return init, start
        return fold_init

    def _select_penalty(self, X, y, init, cfg, rng, start=None, fold_init=None):
        """Grid search with robust CV; returns (penalty, lambda_max, cv_result)."""
        n, p = X.shape
        lam_max = estimate_lambda_max(X, y, init, cfg, start=start)
        grid = make_grid(lam_max, p, n, self.n_grid)
        cv = cv_mmlasso(X, y, grid, init, cfg, self.folds, rng, start=start,
                        fold_init=fold_init)
        return cv.selected, lam_max, cv

    def _fit_mmlasso_std(self, Xs, ys, rng):
        rho0, rho1 = resolve_kernels(self.c0, self.c1)
        init_rng, cv_rng, fold_rng = rng.spawn(3)
        self.init_ = self._fit_initial(Xs, ys, self._sridge_config(rho0), init_rng)
        cfg = self._mm_config(rho1)
        if self.lam is None:
            lam, self.lambda_max_, self.cv_result_ = self._select_penalty(
                Xs, ys, self.init_, cfg, cv_rng,
                fold_init=self._fold_init(Xs, ys, fold_rng))
        else:
            lam, self.lambda_max_, self.cv_result_ = float(self.lam), None, None
        self.lambda_ = lam
        return fit_mmlasso(Xs, ys, lam, self.init_, cfg), cfg

    def _needs_cv(self):
        return self.lam is None or self.gamma is None

    def fit(self, X, y):
        X, y = validate_data(X, y, min_samples=2 * self.folds if self._needs_cv() else 2)
        Xs, ys, self.standardization_ = standardize(X, y, self.fit_intercept)
        rng = as_generator(self.random_state)
        self.fit_, _ = self._fit_mmlasso_std(Xs, ys, rng)
        self._set_coefficients(self.fit_)
        self.scale_ = self.fit_.scale
        self.n_iter_ = self.fit_.iterations
        self.converged_ = self.fit_.converged
        return self


class AdaptiveMMLasso(MMLasso):
    """Adaptive MM-Lasso.

    The pilot is an MM-Lasso fit (``lam`` fixed or cross-validated); its
    standardised coefficients reweight the carriers by ``|pilot|**varsigma``
    and a second MM-Lasso with penalty ``iota`` runs on the reweighted
    carriers from the same S-Ridge initial estimate.  ``iota=None`` selects
    it with the same grid/CV scheme as ``lam``.

    The pilot is kept as ``pilot_`` (standardised scale) and as
    ``pilot_intercept_`` / ``pilot_coef_`` in the original coordinates.
    """

    def __init__(self, iota=None, lam=None, varsigma=1.0, gamma=None, c0=None, c1=None,
                 b=0.5, delta=1e-4, max_iter=500, n_grid=N_GRID, folds=5, n_starts=20,
                 gamma_grid=None, random_state=None, fit_intercept=True):
        super().__init__(lam=lam, gamma=gamma, c0=c0, c1=c1, b=b, delta=delta,
                         max_iter=max_iter, n_grid=n_grid, folds=folds, n_starts=n_starts,
                         gamma_grid=gamma_grid, random_state=random_state,
                         fit_intercept=fit_intercept)
        self.iota = iota
        self.varsigma = varsigma

    def _needs_cv(self):
        return self.iota is None or super()._needs_cv()

    def fit(self, X, y):
        X, y = validate_data(X, y, min_samples=2 * self.folds if self._needs_cv() else 2)
        Xs, ys, self.standardization_ = standardize(X, y, self.fit_intercept)
        rng = as_generator(self.random_state)
        pilot_rng, cv_rng, fold_rng = rng.spawn(3)
        self.pilot_, cfg = self._fit_mmlasso_std(Xs, ys, pilot_rng)
        self.pilot_intercept_, self.pilot_coef_ = destandardize(
            self.pilot_.intercept, self.pilot_.coef, self.standardization_)
        pilot = self.pilot_.coef
        keep = pilot != 0
        w = np.abs(pilot[keep]) ** self.varsigma
        start = (self.init_.intercept, self.init_.coef[keep] / w)

        if self.iota is None and keep.any():
            Xh = Xs[:, keep] * w
            fold_init = self._fold_init(
                Xs, ys, fold_rng, to_start=lambda f: (f.intercept, f.coef[keep] / w))
            iota, self.iota_max_, self.iota_cv_result_ = self._select_penalty(
                Xh, ys, self.init_, cfg, cv_rng, start=start, fold_init=fold_init)
        else:
            iota = 0.0 if self.iota is None else float(self.iota)
            self.iota_max_, self.iota_cv_result_ = None, None
        self.iota_ = iota
        self.fit_ = fit_adaptive_mmlasso(Xs, ys, iota, pilot, self.init_, cfg,
                                         self.varsigma, start=start)
        self._set_coefficients(self.fit_)
        self.scale_ = self.fit_.scale
        self.n_iter_ = self.fit_.iterations
        self.converged_ = self.fit_.converged
        return self
