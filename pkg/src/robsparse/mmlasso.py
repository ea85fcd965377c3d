"""MM-Lasso and adaptive MM-Lasso.

The MM-Lasso minimises ``sum(rho1(r_i / s_n)) + lam * ||slopes||_1`` where
``s_n`` is the residual M-scale of an initial S-Ridge fit and stays frozen.
Each IRLS step majorises the bounded loss by a weighted quadratic and solves
the resulting weighted lasso with inner penalty ``lam * s_n**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import DegenerateDataError
from .kernels import C1_DEFAULT, RhoSpec, _rho_sum_nb, _weight_nb
from .pwls import CHANGE_TOL, KKT_TOL, MAX_SWEEPS, _lasso_nb, _orthogonalize_nb
from .results import FitResult

__all__ = [
    "MMLassoConfig",
    "mm_objective",
    "fit_mmlasso",
    "fit_adaptive_mmlasso",
    "breakdown_probe",
    "mm_kkt_violation",
]

OBJ_SLACK = 1e-8

# IRLS exit codes
_CONVERGED, _MAX_ITER, _REJECTED, _ZERO_WEIGHTS, _CD_FAILED = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class MMLassoConfig:
    rho1: RhoSpec = field(default_factory=lambda: RhoSpec(C1_DEFAULT))
    delta: float = 1e-4
    max_iter: int = 500

    def __post_init__(self):
        if self.delta <= 0 or self.max_iter < 1:
            raise ValueError("delta must be positive and max_iter >= 1")


def mm_objective(intercept, coef, X, y, scale, lam, q=1.0, rho1: RhoSpec | None = None) -> float:
    """``sum(rho1(r_i / scale)) + lam * sum(|coef_j|**q)``; the intercept is not penalised."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    if q <= 0:
        raise ValueError("q must be positive")
    rho1 = rho1 or RhoSpec(C1_DEFAULT)
    coef = np.asarray(coef, dtype=np.float64)
    r = np.asarray(y, dtype=np.float64) - intercept - np.asarray(X) @ coef
    return float(np.sum(rho1.rho(r / scale)) + lam * np.sum(np.abs(coef) ** q))


@numba.njit(cache=True)
def _mm_obj_nb(X, y, a, beta, s, c, lam):
    r = y - a - X @ beta
    return _rho_sum_nb(r, s, c) + lam * np.abs(beta).sum(), r


@numba.njit(cache=True)
def _mm_irls_nb(X, y, lam, s, c, a, beta, delta, max_iter):
    n, p = X.shape
    XT = np.ascontiguousarray(X.T)
    trace = np.empty(max_iter + 1)
    obj, r = _mm_obj_nb(X, y, a, beta, s, c, lam)
    trace[0] = obj
    inner = lam * s * s
    for it in range(1, max_iter + 1):
        w = _weight_nb(r / s, c)
        k = np.sqrt(w)
        kk = np.dot(k, k)
        if kk <= 0.0:
            return a, beta, it - 1, trace[:it], _ZERO_WEIGHTS
        XwT = XT * k
        yw = y * k
        eta, XpT = _orthogonalize_nb(k, XwT)
        beta_new = beta.copy()
        _, status = _lasso_nb(XpT, yw, inner, beta_new, MAX_SWEEPS, CHANGE_TOL, KKT_TOL)
        if status != 0:
            return a, beta, it - 1, trace[:it], _CD_FAILED
        a_new = np.dot(k, yw) / kk - np.dot(eta, beta_new)
        obj_new, r_new = _mm_obj_nb(X, y, a_new, beta_new, s, c, lam)
        if obj_new > obj + OBJ_SLACK:
            return a, beta, it - 1, trace[:it], _REJECTED
        change = np.sqrt((a_new - a) ** 2 + np.sum((beta_new - beta) ** 2))
        size = np.sqrt(a * a + np.sum(beta * beta))
        a, beta, obj, r = a_new, beta_new, obj_new, r_new
        trace[it] = obj
        if size > 0.0:
            if change <= delta * size:
                return a, beta, it, trace[:it + 1], _CONVERGED
        elif change == 0.0:
            return a, beta, it, trace[:it + 1], _CONVERGED
    return a, beta, max_iter, trace, _MAX_ITER


def _run_irls(X, y, lam, scale, cfg, a0, b0):
    a, beta, iters, trace, status = _mm_irls_nb(
        X, y, float(lam), float(scale), cfg.rho1.c, float(a0),
        np.array(b0, dtype=np.float64), cfg.delta, cfg.max_iter)
    return a, beta, iters, np.array(trace), status


def fit_mmlasso(X, y, lam: float, init: FitResult, config: MMLassoConfig | None = None,
                start=None) -> FitResult:
    """MM-Lasso at a fixed penalty ``lam`` on standardised data.

    Parameters
    ----------
    X, y : standardised design and response.
    lam : penalty level, in the parameterisation of the MM objective.
    init : initial robust fit; its ``scale`` is the frozen residual scale.
    start : optional ``(intercept, coef)`` warm start; defaults to ``init``.

    If the IRLS result has objective above ``n`` (the objective of any
    intercept-only candidate is at most ``n``) the iteration is restarted from
    zero slopes and the better of the two is returned.
    """
    cfg = config or MMLassoConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    n, p = X.shape
    if lam < 0:
        raise ValueError("lam must be non-negative")
    scale = float(init.scale)
    if not scale > 0:
        raise DegenerateDataError(
            "the initial fit has zero residual scale (it fits at least half the data exactly)")
    a0, b0 = (init.intercept, init.coef) if start is None else start
    b0 = np.asarray(b0, dtype=np.float64)
    if b0.shape != (p,):
        raise ValueError(f"start has {b0.shape} coefficients, expected ({p},)")

    a, beta, iters, trace, status = _run_irls(X, y, lam, scale, cfg, a0, b0)
    if trace[-1] > n:
        a2, beta2, iters2, trace2, status2 = _run_irls(
            X, y, lam, scale, cfg, np.median(y), np.zeros(p))
        if trace2[-1] < trace[-1]:
            a, beta, iters, trace, status = a2, beta2, iters2, trace2, status2
    return FitResult(
        intercept=float(a), coef=beta, scale=scale, penalty=float(lam),
        iterations=int(iters), objective_trace=trace,
        converged=status in (_CONVERGED, _REJECTED),
    )


def fit_adaptive_mmlasso(X, y, iota: float, pilot_coef, init: FitResult,
                         config: MMLassoConfig | None = None, varsigma: float = 1.0,
                         start=None) -> FitResult:
    """Adaptive MM-Lasso: MM-Lasso on carriers rescaled by ``|pilot|**varsigma``.

    Columns whose pilot coefficient is zero are dropped and their coefficients
    fixed at exactly zero; an all-zero pilot gives an intercept-only fit.
    ``start`` is an optional warm start expressed in the rescaled coordinates
    of the surviving columns.
    """
    if varsigma < 0:
        raise ValueError("varsigma must be non-negative")
    X = np.asarray(X, dtype=np.float64)
    pilot_coef = np.asarray(pilot_coef, dtype=np.float64)
    keep = pilot_coef != 0
    coef = np.zeros(X.shape[1])
    if not keep.any():
        # intercept-only: a single zero column never enters the model
        fit = fit_mmlasso(np.zeros((X.shape[0], 1)), y, iota, init, config,
                          start=(init.intercept, np.zeros(1)))
        return FitResult(
            intercept=fit.intercept, coef=coef, scale=fit.scale, penalty=float(iota),
            iterations=fit.iterations, objective_trace=fit.objective_trace,
            converged=fit.converged,
        )
    w = np.abs(pilot_coef[keep]) ** varsigma
    Xh = X[:, keep] * w
    if start is None:
        start = (init.intercept, init.coef[keep] / w)
    fit = fit_mmlasso(Xh, y, iota, init, config, start=start)
    coef[keep] = fit.coef * w
    # objective_trace stays that of the rescaled problem, which is the adaptive objective
    return FitResult(
        intercept=fit.intercept, coef=coef, scale=fit.scale, penalty=float(iota),
        iterations=fit.iterations, objective_trace=fit.objective_trace,
        converged=fit.converged,
    )


def mm_kkt_violation(fit: FitResult, X, y, rho1: RhoSpec | None = None) -> float:
    """Largest weighted-lasso KKT violation with weights recomputed at ``fit``.

    Reported per observation (gradient entries divided by ``n``) so that the
    number is comparable across sample sizes.
    """
    from .pwls import kkt_violation, orthogonalize_intercept

    rho1 = rho1 or RhoSpec(C1_DEFAULT)
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    r = y - fit.intercept - X @ fit.coef
    k = np.sqrt(rho1.weight(r / fit.scale))
    eta, Xp = orthogonalize_intercept(k, X * k[:, None])
    yw = y * k
    intercept_gap = abs(fit.intercept - (k @ yw / (k @ k) - eta @ fit.coef))
    pen = fit.penalty * fit.scale**2
    return max(kkt_violation(Xp, yw, fit.coef, pen) * (1.0 + pen) / n, intercept_gap)


def breakdown_probe(X, y, lam: float, m: int, magnitude: float, init_fn,
                    config: MMLassoConfig | None = None, seed: int = 0) -> dict:
    """Refit at a fixed penalty after replacing ``m`` rows with gross outliers.

    The first ``m`` rows get carriers of norm ``magnitude`` in random
    directions and responses ``magnitude * U(0.5, 1.5)``; scattering them
    keeps the outliers from being fitted exactly, which would leave the
    residual scale at zero.  ``init_fn(X, y)`` must return the initial fit for
    the contaminated data.  Since ``rho1 <= 1`` and an intercept-only
    candidate has objective at most ``n``, the refit satisfies
    ``lam * ||coef||_1 <= n``.  The contaminated sample is returned as
    ``X`` and ``y`` alongside the fit.
    """
    X = np.array(X, dtype=np.float64)
    y = np.array(y, dtype=np.float64)
    n, p = X.shape
    if not 0 <= m <= n - 1:
        raise ValueError("m must lie in [0, n - 1]")
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((m, p))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    X[:m] = magnitude * directions
    y[:m] = magnitude * rng.uniform(0.5, 1.5, m)
    init = init_fn(X, y)
    fit = fit_mmlasso(X, y, lam, init, config)
    l1 = float(np.abs(fit.coef).sum())
    bound = n / lam if lam > 0 else np.inf
    return {
        "m": m,
        "magnitude": magnitude,
        "l1_norm": l1,
        "bound": bound,
        "objective": fit.objective,
        "within_bound": l1 <= bound * (1 + 1e-12),
        "fit": fit,
        "X": X,
        "y": y,
    }
