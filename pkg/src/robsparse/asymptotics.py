"""Asymptotic constants of MM-type regression estimators.

For an error law F0 the limiting scale ``s0`` solves ``E rho0(u / s0) = b``,
and the oracle covariance of the active coefficients is

    s0**2 * a / bconst**2 * inv(Sigma_I),   a = E psi1(u/s0)**2,
                                            bconst = E psi1'(u/s0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from .exceptions import ConvergenceError
from .kernels import C0_DEFAULT, C1_DEFAULT, RhoSpec

__all__ = [
    "ErrorDist",
    "Normal",
    "StudentT",
    "AsymptoticConstants",
    "asymptotic_constants",
    "oracle_covariance",
    "parse_error_dist",
]

QUAD_TOL = 1e-12
ROOT_TOL = 1e-8


@dataclass(frozen=True)
class ErrorDist:
    """Symmetric error law with a scipy frozen distribution behind it."""

    def frozen(self):
        raise NotImplementedError

    @property
    def variance(self) -> float:
        return float(self.frozen().var())


@dataclass(frozen=True)
class Normal(ErrorDist):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def frozen(self):
        return stats.norm(scale=self.sigma)


@dataclass(frozen=True)
class StudentT(ErrorDist):
    df: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.df > 0 and self.scale > 0):
            raise ValueError("df and scale must be positive")

    def frozen(self):
        return stats.t(self.df, scale=self.scale)

    @property
    def variance(self) -> float:
        if self.df <= 2:
            return float("inf")
        return self.scale**2 * self.df / (self.df - 2)


def parse_error_dist(spec: str) -> ErrorDist:
    """``normal``, ``normal:SIGMA``, ``t3``/``t1`` or ``t:DF``."""
    s = spec.strip().lower()
    if s == "normal":
        return Normal()
    if s.startswith("normal:"):
        return Normal(float(s.split(":", 1)[1]))
    if s.startswith("t:"):
        return StudentT(float(s.split(":", 1)[1]))
    if s.startswith("t") and s[1:].replace(".", "", 1).isdigit():
        return StudentT(float(s[1:]))
    raise ValueError(f"unknown error distribution {spec!r}")


@dataclass(frozen=True)
class AsymptoticConstants:
    s0: float
    a: float
    bconst: float
    efficiency: float

    def __post_init__(self):
        if not (self.s0 > 0 and self.a > 0 and self.bconst > 0):
            raise ValueError("asymptotic constants must be positive")

    @property
    def variance_factor(self) -> float:
        """``s0**2 a / bconst**2``: asymptotic variance for a unit-variance carrier."""
        return self.s0**2 * self.a / self.bconst**2

    def as_dict(self) -> dict:
        return {"s0": self.s0, "a": self.a, "bconst": self.bconst,
                "efficiency": self.efficiency, "variance_factor": self.variance_factor}


def _expect_inside(func, dist, half_width):
    """E[func(u); |u| <= half_width] for a symmetric law, by adaptive quadrature."""
    pdf = dist.pdf
    val, _ = integrate.quad(lambda u: func(u) * pdf(u), 0.0, half_width,
                            epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return 2.0 * val


def _expected_rho(rho0: RhoSpec, dist, s: float) -> float:
    cut = rho0.c * s
    inside = _expect_inside(lambda u: rho0.rho(u / s), dist, cut)
    return inside + 2.0 * dist.sf(cut)


def asymptotic_constants(rho0: RhoSpec | None = None, rho1: RhoSpec | None = None,
                         b: float = 0.5, error_dist: ErrorDist | None = None
                         ) -> AsymptoticConstants:
    """Limit scale and the ``a``/``bconst`` expectations under ``error_dist``.

    ``efficiency`` is the error variance divided by the asymptotic variance
    factor, i.e. the efficiency relative to least squares (infinite when the
    errors have no finite variance).
    """
    rho0 = rho0 or RhoSpec(C0_DEFAULT)
    rho1 = rho1 or RhoSpec(C1_DEFAULT)
    error_dist = error_dist or Normal()
    if not 0.0 < b < 1.0:
        raise ValueError("b must lie in (0, 1)")
    dist = error_dist.frozen()

    def f(s):
        return _expected_rho(rho0, dist, s) - b

    lo, hi = 1e-3, 10.0
    k = 0
    while f(lo) < 0 or f(hi) > 0:
        lo, hi = lo / 10, hi * 10
        k += 1
        if k > 12:
            raise ConvergenceError("could not bracket the asymptotic scale")
    s0 = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    if abs(f(s0)) > ROOT_TOL:
        raise ConvergenceError("asymptotic scale equation not solved to tolerance")

    cut = rho1.c * s0
    a = _expect_inside(lambda u: rho1.psi(u / s0) ** 2, dist, cut)
    # psi1' is continuous and vanishes at the cut, so no mass sits outside
    bconst = _expect_inside(lambda u: rho1.psi_prime(u / s0), dist, cut)
    factor = s0**2 * a / bconst**2
    efficiency = error_dist.variance / factor
    return AsymptoticConstants(s0=float(s0), a=float(a), bconst=float(bconst),
                               efficiency=float(efficiency))


def oracle_covariance(constants: AsymptoticConstants, sigma_active) -> np.ndarray:
    """Asymptotic covariance of ``sqrt(n) (beta_I - beta0_I)`` for the oracle fit."""
    S = np.atleast_2d(np.asarray(sigma_active, dtype=np.float64))
    if S.shape[0] != S.shape[1]:
        raise ValueError("sigma_active must be square")
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise ValueError("sigma_active must be symmetric")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("sigma_active is not positive definite") from exc
    Linv = np.linalg.solve(L, np.eye(S.shape[0]))
    inv = Linv.T @ Linv
    out = constants.variance_factor * inv
    return 0.5 * (out + out.T)
