"""Penalty selection for MM-Lasso: lambda_max search, grids and robust CV."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._cv import kfold_indices, select_min
from .exceptions import ConvergenceError, DegenerateDataError
from .mmlasso import MMLassoConfig, fit_mmlasso
from .results import CvResult, FitResult
from .scale import MAD_CONSTANT, norm_mad, tau_scale

logger = logging.getLogger(__name__)

__all__ = [
    "PenaltyGrid",
    "winsorized_correlation",
    "estimate_lambda_max",
    "make_grid",
    "cv_mmlasso",
    "N_GRID",
]

N_GRID = 30
WINSOR_C = 2.0
MAX_PROBES = 60
BRACKET_RTOL = 0.02


@dataclass(frozen=True)
class PenaltyGrid:
    values: np.ndarray
    includes_zero: bool

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


def _robust_z(v):
    med = np.median(v)
    mad = np.median(np.abs(v - med)) * MAD_CONSTANT
    if not mad > 0:
        raise DegenerateDataError("variable has zero MAD")
    # anything this far out lands on the winsorising ellipse anyway
    with np.errstate(over="ignore"):
        return np.clip((v - med) / mad, -1e150, 1e150)


def winsorized_correlation(x, y, c: float = WINSOR_C) -> float:
    """Correlation after bivariate winsorisation.

    Both variables are robustly standardised; an initial correlation from the
    univariately winsorised data (clipped at ``+-c``) defines an ellipse and
    every point outside it is pulled radially onto it.  The result is the
    Pearson correlation of the adjusted points.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 3:
        raise ValueError("need two vectors of equal length >= 3")
    u, v = _robust_z(x), _robust_z(y)
    r0 = np.corrcoef(np.clip(u, -c, c), np.clip(v, -c, c))[0, 1]
    r0 = float(np.clip(r0, -1 + 1e-10, 1 - 1e-10))
    # Mahalanobis radius d = m * sqrt(q) with m = max(|u|, |v|), so that huge
    # standardised values cannot overflow; shrink = min(1, c / d)
    m = np.maximum(np.abs(u), np.abs(v))
    inside = m == 0
    m[inside] = 1.0
    a, b = u / m, v / m
    q = (a * a - 2 * r0 * a * b + b * b) / (1 - r0 * r0)
    q[inside] = 0.0
    shrink = np.ones_like(q)
    pos = q > 0
    shrink[pos] = np.minimum(1.0, (c / m[pos]) / np.sqrt(q[pos]))
    r = np.corrcoef(u * shrink, v * shrink)[0, 1]
    return float(np.clip(r, -1.0, 1.0))


def _all_zero(fit: FitResult) -> bool:
    return not np.any(fit.coef)


def estimate_lambda_max(X, y, init: FitResult, config: MMLassoConfig | None = None,
                        start=None) -> float:
    """Approximately the smallest penalty at which every slope is zero.

    A seed derived from the largest winsorised correlation between ``y`` and a
    column is refined by bracket expansion and bisection on the all-zero
    property; the upper end of the final bracket (relative width 2%) is
    returned.
    """
    cfg = config or MMLassoConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if p == 0:
        raise ValueError("no columns to penalise")
    s = init.scale
    corr = 0.0
    for j in range(p):
        try:
            corr = max(corr, abs(winsorized_correlation(X[:, j], y)))
        except DegenerateDataError:
            continue
    w0 = 6.0 / cfg.rho1.c**2
    lam0 = n * w0 * corr * max(norm_mad(y), s) / s**2
    if not lam0 > 0:
        lam0 = 1.0

    probes = 0

    def zero_at(lam):
        nonlocal probes
        probes += 1
        if probes > MAX_PROBES:
            raise ConvergenceError("lambda_max bracket not found")
        return _all_zero(fit_mmlasso(X, y, lam, init, cfg, start=start))

    if zero_at(lam0):
        hi, lo = lam0, lam0 / 2
        while zero_at(lo):
            hi, lo = lo, lo / 2
    else:
        lo, hi = lam0, 2 * lam0
        while not zero_at(hi):
            lo, hi = hi, 2 * hi
    while (hi - lo) > BRACKET_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if zero_at(mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def make_grid(lambda_max: float, p: int, n: int, size: int = N_GRID) -> PenaltyGrid:
    """``size`` equally spaced penalties up to ``lambda_max``; zero only when p <= n."""
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    if p > n:
        return PenaltyGrid(np.linspace(lambda_max / size, lambda_max, size), False)
    return PenaltyGrid(np.linspace(0.0, lambda_max, size), True)


def cv_mmlasso(X, y, grid, init: FitResult, config: MMLassoConfig | None = None,
               folds: int = 5, rng: np.random.Generator | None = None,
               start=None, fold_init=None) -> CvResult:
    """Robust k-fold CV over ``grid`` with the tau-scale of held-out residuals.

    Training-fold fits use the frozen scale of ``init`` and start from
    ``start`` (default: ``init``).  Passing ``fold_init`` replaces both per
    fold: it is called with the training indices and must return
    ``(init, start)`` computed from those rows only, so that held-out points
    never influence their own predictions.  The held-out residuals of all
    folds are pooled before the tau-scale is taken.  Ties go to the larger
    penalty.
    """
    cfg = config or MMLassoConfig()
    if rng is None:
        rng = np.random.default_rng(0)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if n < 2 * folds:
        raise ValueError(f"need at least {2 * folds} observations for {folds}-fold CV")
    values = np.asarray(getattr(grid, "values", grid), dtype=np.float64)
    if start is None:
        start = (init.intercept, init.coef)
    parts = kfold_indices(n, folds, rng)
    resid = np.empty((values.size, n))
    failures = np.zeros(values.size, dtype=int)
    for test in parts:
        train = np.setdiff1d(np.arange(n), test)
        fold_start, fold_fit = start, init
        if fold_init is not None:
            fold_fit, fold_start = fold_init(train)
        for g, lam in enumerate(values):
            try:
                fit = fit_mmlasso(X[train], y[train], lam, fold_fit, cfg, start=fold_start)
            except (ConvergenceError, DegenerateDataError) as exc:
                logger.debug("MM-Lasso fold fit failed at lambda=%.3g: %s", lam, exc)
                failures[g] += 1
                continue
            resid[g, test] = y[test] - fit.predict(X[test])
    crit = np.array([tau_scale(resid[g]) if failures[g] == 0 else np.inf
                     for g in range(values.size)])
    idx = select_min(crit, prefer="last")
    return CvResult(candidates=values, criterion=crit, selected=float(values[idx]),
                    selected_index=idx, failures=failures)
