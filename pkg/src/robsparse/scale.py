"""Robust scale and location primitives: M-scale, tau-scale, median, MAD."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy import stats

from .exceptions import ConvergenceError
from .kernels import C0_DEFAULT, RhoSpec, _rho_sum_nb

__all__ = [
    "MScaleConfig",
    "mscale",
    "median",
    "norm_mad",
    "MAD_CONSTANT",
    "tau_scale",
    "TAU_C",
    "tau_consistency_constant",
]

MAD_CONSTANT = 1.0 / stats.norm.ppf(0.75)
TAU_C = 3.0


@dataclass(frozen=True)
class MScaleConfig:
    rho0: RhoSpec = field(default_factory=lambda: RhoSpec(C0_DEFAULT))
    b: float = 0.5
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError(f"b must lie in (0, 1), got {self.b!r}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@numba.njit(cache=True)
def _mscale_nb(u, c, b, max_iter):
    """Return (scale, status); status 0 ok, 1 bracketing failed, 2 no convergence."""
    n = u.shape[0]
    absu = np.abs(u)
    nzero = 0
    for i in range(n):
        if absu[i] == 0.0:
            nzero += 1
    if nzero >= (1.0 - b) * n:
        return 0.0, 0

    s0 = np.median(absu) / 0.6744897501960817
    if s0 <= 0.0:
        s0 = np.mean(absu)

    # f(s) = mean rho(u/s) - b is continuous and non-increasing in s
    lo = s0
    flo = _rho_sum_nb(u, lo, c) / n - b
    k = 0
    while flo <= 0.0:
        if flo == 0.0:
            return lo, 0
        lo *= 0.5
        flo = _rho_sum_nb(u, lo, c) / n - b
        k += 1
        if k > max_iter:
            return lo, 1
    hi = s0
    fhi = _rho_sum_nb(u, hi, c) / n - b
    while fhi >= 0.0:
        if fhi == 0.0:
            return hi, 0
        hi *= 2.0
        fhi = _rho_sum_nb(u, hi, c) / n - b
        k += 1
        if k > max_iter:
            return hi, 1

    # Brent's method on [lo, hi]
    a, fa = lo, flo
    bb, fb = hi, fhi
    cc, fc = a, fa
    d = bb - a
    e = d
    eps = 2.220446049250313e-16
    for it in range(max_iter):
        if (fb > 0.0 and fc > 0.0) or (fb < 0.0 and fc < 0.0):
            cc, fc = a, fa
            d = bb - a
            e = d
        if abs(fc) < abs(fb):
            a, fa = bb, fb
            bb, fb = cc, fc
            cc, fc = a, fa
        tol1 = 2.0 * eps * abs(bb) + 5e-324
        xm = 0.5 * (cc - bb)
        if abs(xm) <= tol1 or fb == 0.0:
            return bb, 0
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == cc:
                pp = 2.0 * xm * s
                qq = 1.0 - s
            else:
                qq = fa / fc
                r = fb / fc
                pp = s * (2.0 * xm * qq * (qq - r) - (bb - a) * (r - 1.0))
                qq = (qq - 1.0) * (r - 1.0) * (s - 1.0)
            if pp > 0.0:
                qq = -qq
            pp = abs(pp)
            if 2.0 * pp < min(3.0 * xm * qq - abs(tol1 * qq), abs(e * qq)):
                e = d
                d = pp / qq
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = bb, fb
        if abs(d) > tol1:
            bb += d
        else:
            bb += tol1 if xm > 0 else -tol1
        fb = _rho_sum_nb(u, bb, c) / n - b
    return bb, 2


def mscale(residuals, cfg: MScaleConfig | None = None) -> float:
    """M-estimate of scale of ``residuals``.

    Solves ``mean(rho0(u / s)) = b``.  Returns 0 when at least ``(1 - b) n``
    of the residuals are exactly zero.

    Raises
    ------
    ConvergenceError
        If the root cannot be bracketed or the defining equation is not met
        to ``cfg.tol``.
    """
    cfg = cfg or MScaleConfig()
    u = np.ascontiguousarray(residuals, dtype=np.float64).ravel()
    if u.size == 0:
        raise ValueError("mscale needs at least one residual")
    if not np.all(np.isfinite(u)):
        raise ValueError("residuals must be finite")
    # solve on a unit-size copy so that tiny or huge residuals neither
    # underflow nor overflow; the scale is equivariant
    size = float(np.max(np.abs(u)))
    if size == 0.0:
        return 0.0
    u = u / size
    s, status = _mscale_nb(u, cfg.rho0.c, cfg.b, cfg.max_iter)
    if status != 0:
        raise ConvergenceError(f"M-scale root-finding failed (status {status})")
    if s > 0:
        resid = _rho_sum_nb(u, s, cfg.rho0.c) / u.size - cfg.b
        if abs(resid) > cfg.tol:
            raise ConvergenceError(
                f"M-scale equation residual {resid:.3g} exceeds tol {cfg.tol:.3g}"
            )
    return float(s) * size


def median(v) -> float:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("median of an empty vector")
    return float(np.median(v))


def norm_mad(v) -> float:
    """Median absolute deviation about the median, scaled for the normal."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("norm_mad of an empty vector")
    return float(np.median(np.abs(v - np.median(v))) * MAD_CONSTANT)


@lru_cache(maxsize=None)
def tau_consistency_constant(c: float = TAU_C) -> float:
    """E min(Z^2, c^2) for standard normal Z."""
    phi = stats.norm.pdf(c)
    inner = (2.0 * stats.norm.cdf(c) - 1.0) - 2.0 * c * phi
    return float(inner + c * c * 2.0 * stats.norm.sf(c))


def tau_scale(residuals, c: float = TAU_C) -> float:
    """Truncated-square tau-scale built on the normalised MAD.

    ``tau^2 = s^2 / (n kappa) * sum(min((r/s)^2, c^2))`` with ``s`` the
    normalised MAD of the residuals and ``kappa`` making it consistent at the
    normal model.
    """
    r = np.asarray(residuals, dtype=np.float64).ravel()
    if r.size == 0:
        raise ValueError("tau_scale of an empty vector")
    s = norm_mad(r)
    if s == 0.0:
        return 0.0
    kappa = tau_consistency_constant(c)
    t = np.minimum(np.abs(r) / s, c) ** 2
    return float(s * np.sqrt(t.mean() / kappa))
