"""S-Ridge: ridge-penalised S-estimator of regression.

Minimises ``n * s_n(r(beta))**2 + gamma * ||slopes||_2**2`` with ``s_n`` the
bisquare M-scale.  The optimiser is a multi-start IRLS; each step solves the
weighted ridge system whose fixed points are the stationary points of the
objective, and step-halving keeps every accepted step a descent step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np

from ._cv import kfold_indices, select_min
from .exceptions import ConvergenceError
from .kernels import C0_DEFAULT, RhoSpec, _weight_nb
from .results import CvResult, FitResult
from .scale import MScaleConfig, _mscale_nb, mscale, norm_mad, tau_scale

logger = logging.getLogger(__name__)

__all__ = [
    "SRidgeConfig",
    "sridge_objective",
    "default_gamma_grid",
    "fit_sridge",
    "cv_sridge",
]

MAX_HALVINGS = 30
MAX_REDRAWS = 10


@dataclass(frozen=True)
class SRidgeConfig:
    rho0: RhoSpec = field(default_factory=lambda: RhoSpec(C0_DEFAULT))
    b: float = 0.5
    gamma_grid: tuple | None = None
    n_grid: int = 20
    n_starts: int = 20
    n_refine: int = 2
    n_keep: int = 5
    tol: float = 1e-6
    max_iter: int = 200
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.gamma_grid is not None:
            g = np.asarray(self.gamma_grid, dtype=float)
            if g.size == 0 or np.any(np.diff(g) < 0) or np.any(g < 0):
                raise ValueError("gamma_grid must be non-empty, sorted and non-negative")
        if (self.tol <= 0 or self.n_starts < 1 or self.max_iter < 1
                or self.n_refine < 0 or self.n_keep < 1):
            raise ValueError("invalid S-Ridge configuration")

    @property
    def mscale_config(self) -> MScaleConfig:
        return MScaleConfig(rho0=self.rho0, b=self.b)


def sridge_objective(intercept, coef, X, y, gamma, cfg: SRidgeConfig | None = None) -> float:
    cfg = cfg or SRidgeConfig()
    r = y - intercept - X @ coef
    s = mscale(r, cfg.mscale_config)
    return X.shape[0] * s * s + gamma * float(coef @ coef)


@numba.njit(cache=True)
def _objective_nb(X, y, a, beta, gamma, c, b):
    r = y - a - X @ beta
    s, status = _mscale_nb(r, c, b, 200)
    if status != 0:
        return np.inf, s, r
    return X.shape[0] * s * s + gamma * np.dot(beta, beta), s, r


@numba.njit(cache=True)
def _weighted_ridge_nb(X, y, w, gamma, dual):
    """Weighted ridge with unpenalised intercept; returns (a, beta, ok)."""
    n, p = X.shape
    sw = w.sum()
    if sw <= 0.0:
        return 0.0, np.zeros(p), False
    xbar = (w @ X) / sw
    ybar = np.dot(w, y) / sw
    sq = np.sqrt(w)
    A = (X - xbar) * sq.reshape(n, 1)
    z = (y - ybar) * sq
    if dual:
        K = A @ A.T
        for i in range(n):
            K[i, i] += gamma
        alpha = np.linalg.solve(K, z)
        beta = A.T @ alpha
    else:
        G = A.T @ A
        for j in range(p):
            G[j, j] += gamma
        beta = np.linalg.solve(G, A.T @ z)
    ok = np.all(np.isfinite(beta))
    return ybar - np.dot(xbar, beta), beta, ok


@numba.njit(cache=True)
def _irls_nb(X, y, gamma, a, beta, c, b, tol, max_iter):
    """IRLS from one start.  Returns (a, beta, obj, iterations, trace, status).

    status 0 converged, 1 max_iter reached, 2 no descent possible (stopped at
    the current point), 3 the start itself has no finite objective.
    """
    n, p = X.shape
    dual = p >= n
    trace = np.empty(max_iter + 1)
    obj, s, r = _objective_nb(X, y, a, beta, gamma, c, b)
    trace[0] = obj
    if not np.isfinite(obj):
        return a, beta, obj, 0, trace[:1], 3
    for it in range(1, max_iter + 1):
        if s <= 0.0:
            return a, beta, obj, it - 1, trace[:it], 0
        w = _weight_nb(r / s, c)
        gam = gamma * np.dot(w, r * r) / (n * s * s)
        if gamma > 0.0 and gam <= 0.0:
            gam = gamma * 1e-12
        a_new, beta_new, ok = _weighted_ridge_nb(X, y, w, gam, dual)
        if not ok:
            return a, beta, obj, it - 1, trace[:it], 2
        da = a_new - a
        db = beta_new - beta
        step = 1.0
        accepted = False
        for h in range(MAX_HALVINGS):
            a_try = a + step * da
            b_try = beta + step * db
            obj_try, s_try, r_try = _objective_nb(X, y, a_try, b_try, gamma, c, b)
            if obj_try <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return a, beta, obj, it - 1, trace[:it], 2
        change = np.sqrt(step * step * (da * da + np.dot(db, db)))
        size = np.sqrt(a * a + np.dot(beta, beta))
        a, beta, obj, s, r = a_try, b_try, obj_try, s_try, r_try
        trace[it] = obj
        if change <= tol * max(size, 1.0):
            return a, beta, obj, it, trace[:it + 1], 0
    return a, beta, obj, max_iter, trace, 1


def _ridge_start(X, y, gamma):
    n, p = X.shape
    if gamma <= 0:
        Xc = np.column_stack([np.ones(n), X])
        sol = np.linalg.lstsq(Xc, y, rcond=None)[0]
        return sol[0], sol[1:]
    a, beta, ok = _weighted_ridge_nb(np.ascontiguousarray(X), np.ascontiguousarray(y),
                                     np.ones(n), float(gamma), p >= n)
    if not ok:
        raise np.linalg.LinAlgError("ridge start is singular")
    return a, beta


def _subsample_size(n, p):
    # p+1 rows fit the model exactly; capped so that subsamples stay distinct
    return int(min(p + 1, max(2, (n + 1) // 2)))


def _candidate_starts(X, y, gamma, n_starts, rng):
    n, p = X.shape
    starts = [_ridge_start(X, y, gamma)]
    h = _subsample_size(n, p)
    g_sub = gamma if gamma > 0 else 1e-8 * n
    for _ in range(n_starts - 1):
        for _attempt in range(MAX_REDRAWS):
            idx = rng.choice(n, size=h, replace=False)
            try:
                a, beta = _ridge_start(X[idx], y[idx], g_sub * h / n)
            except np.linalg.LinAlgError:
                continue
            if np.all(np.isfinite(beta)) and np.isfinite(a):
                starts.append((a, beta))
                break
    return starts


def fit_sridge(X, y, gamma: float, config: SRidgeConfig | None = None,
               rng: np.random.Generator | None = None) -> FitResult:
    """Fit the S-Ridge estimator at a fixed ``gamma`` on standardised data.

    Every start gets ``n_refine`` IRLS steps; the ``n_keep`` best are then
    iterated to convergence and the one with the smallest objective is
    returned.  Its objective never exceeds that of any start.
    """
    cfg = config or SRidgeConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError("gamma must be non-negative")

    starts = _candidate_starts(X, y, gamma, cfg.n_starts, rng)
    c, b = cfg.rho0.c, cfg.b
    # a few IRLS steps from every start, then full iterations for the best few
    partial = []
    start_min = np.inf
    for a0, b0 in starts:
        a, beta, obj, iters, trace, status = _irls_nb(
            X, y, gamma, float(a0), np.array(b0, dtype=np.float64), c, b,
            cfg.tol, max(cfg.n_refine, 1))
        if status == 3:
            continue
        start_min = min(start_min, trace[0])
        partial.append((obj, a, beta, iters, trace, status))
    if not partial:
        raise ConvergenceError("no S-Ridge start produced a finite objective")
    partial.sort(key=lambda t: t[0])
    best = None
    for obj0, a0, b0, iters0, trace0, status0 in partial[:cfg.n_keep]:
        if status0 == 1:
            a, beta, obj, iters, trace, status = _irls_nb(
                X, y, gamma, a0, b0, c, b, cfg.tol, cfg.max_iter)
            trace = np.concatenate([trace0, trace[1:]])
            iters += iters0
        else:
            a, beta, obj, iters, trace, status = a0, b0, obj0, iters0, trace0, status0
        if best is None or obj < best[2]:
            best = (a, beta, obj, iters, trace, status)
    if not np.isfinite(best[2]):
        raise ConvergenceError("no S-Ridge start produced a finite objective")
    a, beta, obj, iters, trace, status = best
    if obj > start_min + 1e-12 * max(1.0, abs(start_min)):
        raise ConvergenceError("S-Ridge iterations ended above their best start")
    s = mscale(y - a - X @ beta, cfg.mscale_config)
    return FitResult(
        intercept=float(a), coef=np.array(beta), scale=s, penalty=gamma,
        iterations=int(iters), objective_trace=np.array(trace),
        converged=status in (0, 2),
    )


def default_gamma_grid(X, y, n_grid: int = 20) -> np.ndarray:
    n, p = X.shape
    base = n * max(norm_mad(y), np.finfo(float).tiny) ** 2 / p
    return base * np.logspace(-3, 2, n_grid)


def cv_sridge(X, y, config: SRidgeConfig | None = None,
              rng: np.random.Generator | None = None) -> CvResult:
    """Robust k-fold cross-validation of the ridge penalty.

    The criterion for each candidate is the sum over folds of the tau-scale of
    the held-out residuals.  Ties go to the smallest gamma.
    """
    cfg = config or SRidgeConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if n < 10:
        raise ValueError("cross-validation needs at least 10 observations")
    grid = (np.asarray(cfg.gamma_grid, dtype=float) if cfg.gamma_grid is not None
            else default_gamma_grid(X, y, cfg.n_grid))
    folds = kfold_indices(n, cfg.folds, rng)
    crit = np.zeros(grid.size)
    failures = np.zeros(grid.size, dtype=int)
    fold_rngs = rng.spawn(len(folds))
    for k, test in enumerate(folds):
        train = np.setdiff1d(np.arange(n), test)
        fold_rng = fold_rngs[k]
        for g_idx, gamma in enumerate(grid):
            try:
                fit = fit_sridge(X[train], y[train], gamma, cfg, fold_rng)
            except (ConvergenceError, np.linalg.LinAlgError) as exc:
                logger.debug("S-Ridge fold %d gamma %.3g failed: %s", k, gamma, exc)
                failures[g_idx] += 1
                continue
            crit[g_idx] += tau_scale(y[test] - fit.predict(X[test]))
    crit[failures > 0] = np.inf
    idx = select_min(crit, prefer="first")
    return CvResult(candidates=grid, criterion=crit, selected=float(grid[idx]),
                    selected_index=idx, failures=failures)
