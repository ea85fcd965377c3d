"""Weighted lasso subproblem with an unpenalised intercept.

The intercept column of the weighted design, ``k = sqrt(w)``, is projected
out of the slope columns; the slopes then solve an intercept-free lasso by
cyclic coordinate descent and the intercept is recovered in closed form.
"""
from __future__ import annotations

import numba
import numpy as np

from .exceptions import ConvergenceError, DegenerateDataError

__all__ = [
    "soft_threshold",
    "orthogonalize_intercept",
    "solve_weighted_lasso",
    "recover_intercept",
    "kkt_violation",
    "lasso_objective",
    "KKT_TOL",
]

KKT_TOL = 1e-6
CHANGE_TOL = 1e-9
MAX_SWEEPS = 10_000


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@numba.njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@numba.njit(cache=True)
def _kkt_ok(XT, r, beta, penalty, ktol):
    p, n = XT.shape
    for j in range(p):
        g = 0.0
        for i in range(n):
            g += XT[j, i] * r[i]
        if beta[j] != 0.0:
            sgn = 1.0 if beta[j] > 0 else -1.0
            if abs(g - penalty * sgn) > ktol * (1.0 + penalty):
                return False
        elif abs(g) > penalty + ktol:
            return False
    return True


@numba.njit(cache=True)
def _polish_nb(XT, y, penalty, beta, ktol):
    """Exact solve on the current support with the current signs.

    Accepts (writing into ``beta``) only if the signs are reproduced and the
    full KKT conditions hold, in which case the result is the exact minimiser.
    """
    p, n = XT.shape
    support = np.flatnonzero(beta)
    m = support.shape[0]
    if m == 0 or m >= n:
        return False
    XA = np.empty((m, n))
    for a in range(m):
        XA[a] = XT[support[a]]
    G = XA @ XA.T
    rhs = XA @ y
    for a in range(m):
        rhs[a] -= penalty * (1.0 if beta[support[a]] > 0 else -1.0)
    try:
        sol = np.linalg.solve(G, rhs)
    except Exception:
        return False
    for a in range(m):
        if not np.isfinite(sol[a]) or sol[a] == 0.0 or (sol[a] > 0) != (beta[support[a]] > 0):
            return False
    trial = np.zeros(p)
    for a in range(m):
        trial[support[a]] = sol[a]
    r = y - XT.T @ trial
    if not _kkt_ok(XT, r, trial, penalty, ktol):
        return False
    beta[:] = trial
    return True


POLISH_TOL = 1e-3
ACTIVE_SWEEP_CAP = 100  # active-set sweeps between full sweeps


@numba.njit(cache=True)
def _cd_lasso_nb(XT, y, penalty, beta, max_sweeps, change_tol, ktol):
    """Cyclic coordinate descent for 0.5||y - X b||^2 + penalty ||b||_1.

    ``XT`` is the transposed design (p, n).  ``beta`` is updated in place.
    Once the active set settles, an exact solve on it is attempted and kept if
    it passes the KKT check.  Returns (sweeps, status); status 0 converged with
    a KKT certificate, 1 hit max_sweeps.
    """
    p, n = XT.shape
    col_sq = np.zeros(p)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += XT[j, i] * XT[j, i]
        col_sq[j] = acc
    r = y.copy()
    for j in range(p):
        if col_sq[j] == 0.0:
            beta[j] = 0.0
        elif beta[j] != 0.0:
            for i in range(n):
                r[i] -= XT[j, i] * beta[j]

    polished = np.zeros(p, dtype=np.bool_)
    tried = False
    active_only = False
    active_sweeps = 0
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        if active_only:
            active_sweeps += 1
            if active_sweeps > ACTIVE_SWEEP_CAP:
                active_only = False
        max_change = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            if active_only and beta[j] == 0.0:
                continue
            g = 0.0
            for i in range(n):
                g += XT[j, i] * r[i]
            old = beta[j]
            new = _soft(g + col_sq[j] * old, penalty) / col_sq[j]
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    r[i] -= XT[j, i] * delta
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < POLISH_TOL:
            support = beta != 0.0
            if not tried or sweeps % 16 == 0 or np.any(support != polished):
                tried = True
                polished[:] = support
                if _polish_nb(XT, y, penalty, beta, ktol):
                    return sweeps, 0
        if max_change < change_tol:
            if active_only:
                active_only = False
                continue
            # refresh the residual before certifying
            for i in range(n):
                r[i] = y[i]
            for j in range(p):
                if beta[j] != 0.0:
                    for i in range(n):
                        r[i] -= XT[j, i] * beta[j]
            if _kkt_ok(XT, r, beta, penalty, ktol):
                return sweeps, 0
        elif not active_only:
            active_only = True
            active_sweeps = 0
    return sweeps, 1


@numba.njit(cache=True)
def _quad_obj(G, c, beta, penalty):
    return 0.5 * beta @ (G @ beta) - c @ beta + penalty * np.sum(np.abs(beta))


@numba.njit(cache=True)
def _feature_sign_nb(G, c, penalty, beta, max_iter):
    """Active-set (feature-sign) search on the Gram form of the lasso.

    Minimises ``0.5 b'Gb - c'b + penalty ||b||_1`` starting from ``beta``
    (updated in place).  Each step solves the equality-constrained problem on
    the active set with fixed signs and line-searches towards it through the
    sign changes, so the objective never increases.  Returns a status: 0
    optimal, 1 iteration limit, 2 singular or ill-conditioned active block.
    """
    p = c.shape[0]
    tol = 1e-12 * (1.0 + penalty + np.max(np.abs(c)))
    for it in range(max_iter):
        grad = G @ beta - c
        # optimality on the active set
        active_ok = True
        for j in range(p):
            if beta[j] != 0.0:
                sg = 1.0 if beta[j] > 0 else -1.0
                if abs(grad[j] + penalty * sg) > tol * 1e3:
                    active_ok = False
                    break
        theta = np.sign(beta)
        if active_ok:
            best = -1
            worst = penalty + tol
            for j in range(p):
                if beta[j] == 0.0 and abs(grad[j]) > worst:
                    worst = abs(grad[j])
                    best = j
            if best < 0:
                return 0
            theta[best] = -1.0 if grad[best] > 0 else 1.0
        support = np.flatnonzero(theta)
        m = support.shape[0]
        GA = np.empty((m, m))
        rhs = np.empty(m)
        for a in range(m):
            rhs[a] = c[support[a]] - penalty * theta[support[a]]
            for b2 in range(m):
                GA[a, b2] = G[support[a], support[b2]]
        try:
            sol = np.linalg.solve(GA, rhs)
        except Exception:
            return 2
        if not np.all(np.isfinite(sol)):
            return 2
        old = beta.copy()
        old_obj = _quad_obj(G, c, old, penalty)
        target = np.zeros(p)
        for a in range(m):
            target[support[a]] = sol[a]
        best_beta = target.copy()
        best_obj = _quad_obj(G, c, target, penalty)
        for a in range(m):
            j = support[a]
            if old[j] != 0.0 and (target[j] > 0) != (old[j] > 0):
                t = old[j] / (old[j] - target[j])
                trial = old + t * (target - old)
                trial[j] = 0.0
                f = _quad_obj(G, c, trial, penalty)
                if f < best_obj:
                    best_obj = f
                    best_beta = trial
        if not best_obj <= old_obj + 1e-12 * (1.0 + abs(old_obj)):
            return 2  # no descent: ill-conditioned active block
        for j in range(p):
            if abs(best_beta[j]) < 1e-300:
                best_beta[j] = 0.0
        beta[:] = best_beta
    return 1


@numba.njit(cache=True)
def _lars_lasso_nb(G, c, penalty, beta, max_steps):
    """Lasso homotopy (LARS with the lasso modification) from zero down to
    ``penalty`` on the Gram form.  Writes the solution into ``beta``.

    Returns 0 on success, 1 on step limit, 2 on a singular active block.
    """
    p = c.shape[0]
    beta[:] = 0.0
    corr = c.copy()
    lam = 0.0
    for j in range(p):
        if abs(corr[j]) > lam:
            lam = abs(corr[j])
    if lam <= penalty:
        return 0
    active = np.zeros(p, dtype=np.bool_)
    sign = np.zeros(p)
    j0 = np.argmax(np.abs(corr))
    active[j0] = True
    sign[j0] = 1.0 if corr[j0] > 0 else -1.0
    eps = 1e-12
    for step in range(max_steps):
        A = np.flatnonzero(active)
        m = A.shape[0]
        GA = np.empty((m, m))
        for a in range(m):
            for b2 in range(m):
                GA[a, b2] = G[A[a], A[b2]]
        sA = np.empty(m)
        for a in range(m):
            sA[a] = sign[A[a]]
        try:
            dA = np.linalg.solve(GA, sA)
        except Exception:
            return 2
        if not np.all(np.isfinite(dA)):
            return 2
        # the step size at which the active correlations reach the target
        gamma = lam - penalty
        event = -1
        joining = False
        for j in range(p):
            if active[j]:
                continue
            aj = 0.0
            for a in range(m):
                aj += G[j, A[a]] * dA[a]
            for num, den in ((lam - corr[j], 1.0 - aj), (lam + corr[j], 1.0 + aj)):
                if den > eps:
                    g = num / den
                    if eps < g < gamma:
                        gamma = g
                        event = j
                        joining = True
        for a in range(m):
            j = A[a]
            if dA[a] != 0.0:
                g = -beta[j] / dA[a]
                if eps < g < gamma:
                    gamma = g
                    event = j
                    joining = False
        for a in range(m):
            beta[A[a]] += gamma * dA[a]
        lam -= gamma
        corr = c - G @ beta
        if event < 0:
            return 0
        if joining:
            active[event] = True
            sign[event] = 1.0 if corr[event] > 0 else -1.0
        else:
            active[event] = False
            beta[event] = 0.0
            sign[event] = 0.0
        if lam <= penalty * (1.0 + 1e-12):
            return 0
    return 1


GRAM_MAX_P = 2000  # largest p for the Gram-matrix solvers


@numba.njit(cache=True)
def _lasso_nb(XT, y, penalty, beta, max_sweeps, change_tol, ktol):
    """Certified lasso solve with the same contract as ``_cd_lasso_nb``.

    For moderate p an exact Gram-matrix method runs first: active-set search
    warm-started from ``beta`` when p < n, the lasso homotopy from zero
    otherwise.  Coordinate descent is the fallback; whichever answer is
    returned has passed the KKT check.
    """
    p, n = XT.shape
    if p <= GRAM_MAX_P:
        G = XT @ XT.T
        c = XT @ y
        trial = beta.copy()
        if p < n:
            status = _feature_sign_nb(G, c, penalty, trial, 20 * p + 100)
        else:
            status = _lars_lasso_nb(G, c, penalty, trial, 8 * p + 100)
        if status == 0:
            r = y - XT.T @ trial
            if _kkt_ok(XT, r, trial, penalty, ktol):
                beta[:] = trial
                return 0, 0
    return _cd_lasso_nb(XT, y, penalty, beta, max_sweeps, change_tol, ktol)


@numba.njit(cache=True)
def _orthogonalize_nb(k, XwT):
    p, n = XwT.shape
    kk = 0.0
    for i in range(n):
        kk += k[i] * k[i]
    eta = np.zeros(p)
    XpT = np.empty_like(XwT)
    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += k[i] * XwT[j, i]
        eta[j] = acc / kk
        for i in range(n):
            XpT[j, i] = XwT[j, i] - eta[j] * k[i]
    return eta, XpT


def orthogonalize_intercept(k, Xw):
    """Split each weighted column into its projection on ``k`` and the rest.

    Parameters
    ----------
    k : (n,) the weighted intercept column ``sqrt(w)``.
    Xw : (n, p) the row-weighted slope columns.

    Returns
    -------
    eta : (p,) projection coefficients ``k'x_j / ||k||^2``.
    X_perp : (n, p) columns orthogonal to ``k``.
    """
    k = np.ascontiguousarray(k, dtype=np.float64).ravel()
    Xw = np.asarray(Xw, dtype=np.float64)
    if not np.dot(k, k) > 0:
        raise DegenerateDataError("all weights are zero")
    eta, XpT = _orthogonalize_nb(k, np.ascontiguousarray(Xw.T))
    return eta, XpT.T


def solve_weighted_lasso(X_perp, y_w, penalty, warm_start=None, *,
                         max_sweeps=MAX_SWEEPS, ktol=KKT_TOL):
    """Minimise ``0.5 ||y_w - X_perp b||^2 + penalty ||b||_1``.

    An exact Gram-matrix method is tried first (active-set search when there
    are fewer columns than rows, the lasso homotopy otherwise); coordinate
    descent is the general fallback.  The returned solution carries a KKT
    certificate at tolerance ``ktol``; :class:`ConvergenceError` is raised if
    that cannot be reached within ``max_sweeps`` coordinate sweeps.
    """
    if penalty < 0:
        raise ValueError("penalty must be non-negative")
    XT = np.ascontiguousarray(np.asarray(X_perp, dtype=np.float64).T)
    y = np.ascontiguousarray(y_w, dtype=np.float64).ravel()
    beta = np.zeros(XT.shape[0]) if warm_start is None else np.array(warm_start, dtype=np.float64)
    sweeps, status = _lasso_nb(XT, y, float(penalty), beta, max_sweeps, CHANGE_TOL, ktol)
    if status != 0:
        raise ConvergenceError(f"no certified lasso solution within {max_sweeps} sweeps")
    return beta


def recover_intercept(k, eta, y_w, slopes) -> float:
    """Intercept solving the unpenalised normal equation along ``k``."""
    k = np.asarray(k, dtype=np.float64).ravel()
    kk = float(np.dot(k, k))
    if not kk > 0:
        raise DegenerateDataError("all weights are zero")
    return float(np.dot(k, y_w) / kk - np.dot(eta, slopes))


def kkt_violation(X_perp, y_w, beta, penalty) -> float:
    """Largest violation of the lasso optimality conditions (0 if certified)."""
    g = X_perp.T @ (y_w - X_perp @ beta)
    active = beta != 0
    v_act = np.abs(g[active] - penalty * np.sign(beta[active])) / (1.0 + penalty)
    v_in = np.abs(g[~active]) - penalty
    return float(max(v_act.max(initial=0.0), v_in.max(initial=0.0), 0.0))


def lasso_objective(X, y, beta, penalty) -> float:
    r = y - X @ beta
    return 0.5 * float(r @ r) + penalty * float(np.abs(beta).sum())
