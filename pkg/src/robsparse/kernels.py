"""Bounded rho-functions (Tukey bisquare) and tuning-constant solvers.

The bisquare is normalised so that ``rho(u) = 1`` for ``|u| >= c``.  All
functions accept scalars or numpy arrays and are vectorised.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from scipy import optimize

__all__ = [
    "Family",
    "RhoSpec",
    "rho",
    "psi",
    "psi_prime",
    "weight",
    "normal_expectation",
    "tune_for_scale_consistency",
    "tune_for_efficiency",
    "normal_efficiency",
    "C0_DEFAULT",
    "C1_DEFAULT",
]

QUAD_NODES = 40  # nodes per quadrature piece


class Family(enum.Enum):
    BISQUARE = "bisquare"


@dataclass(frozen=True)
class RhoSpec:
    """A member of a bounded rho family, identified by its tuning constant."""

    c: float
    family: Family = Family.BISQUARE

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"tuning constant must be positive, got {self.c!r}")

    def rho(self, u):
        return rho(self, u)

    def psi(self, u):
        return psi(self, u)

    def psi_prime(self, u):
        return psi_prime(self, u)

    def weight(self, u):
        return weight(self, u)


def _as_array(u):
    return np.asarray(u, dtype=np.float64)


def _ret(out, u):
    return out if np.ndim(u) else float(out)


def rho(spec: RhoSpec, u):
    u = _as_array(u)
    t = np.minimum(np.abs(u) / spec.c, 1.0) ** 2
    return _ret(1.0 - (1.0 - t) ** 3, u)


def psi(spec: RhoSpec, u):
    u = _as_array(u)
    c = spec.c
    t = np.minimum(np.abs(u) / c, 2.0) ** 2
    out = np.where(t <= 1.0, 6.0 * u / c**2 * (1.0 - t) ** 2, 0.0)
    return _ret(out, u)


def psi_prime(spec: RhoSpec, u):
    u = _as_array(u)
    c = spec.c
    t = np.minimum(np.abs(u) / c, 2.0) ** 2
    out = np.where(t <= 1.0, 6.0 / c**2 * (1.0 - t) * (1.0 - 5.0 * t), 0.0)
    return _ret(out, u)


def weight(spec: RhoSpec, u):
    """psi(u)/u with the removable singularity at zero filled in."""
    u = _as_array(u)
    c = spec.c
    t = np.minimum(np.abs(u) / c, 2.0) ** 2
    out = np.where(t <= 1.0, 6.0 / c**2 * (1.0 - t) ** 2, 0.0)
    return _ret(out, u)


# -- numba versions used by the inner solvers ---------------------------------

@numba.njit(cache=True)
def _rho_nb(u, c):
    out = np.empty_like(u)
    for i in range(u.shape[0]):
        t = (u[i] / c) ** 2
        if t >= 1.0:
            out[i] = 1.0
        else:
            out[i] = 1.0 - (1.0 - t) ** 3
    return out


@numba.njit(cache=True)
def _rho_sum_nb(u, scale, c):
    acc = 0.0
    for i in range(u.shape[0]):
        t = (u[i] / (scale * c)) ** 2
        if t >= 1.0:
            acc += 1.0
        else:
            acc += 1.0 - (1.0 - t) ** 3
    return acc


@numba.njit(cache=True)
def _weight_nb(u, c):
    out = np.empty_like(u)
    k = 6.0 / (c * c)
    for i in range(u.shape[0]):
        t = (u[i] / c) ** 2
        if t >= 1.0:
            out[i] = 0.0
        else:
            out[i] = k * (1.0 - t) ** 2
    return out


# -- normal-theory tuning ------------------------------------------------------

@lru_cache(maxsize=None)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


_TAIL_LIMIT = 40.0


def normal_expectation(func, breaks=(), n_nodes: int = QUAD_NODES) -> float:
    """E[func(Z)] for standard normal Z.

    Piecewise Gauss-Legendre on the intervals cut by ``breaks`` (points where
    ``func`` or its low derivatives are not smooth), with ``n_nodes`` nodes per
    piece.  The density is negligible beyond ``|z| = 40``.
    """
    cuts = sorted({float(b) for b in breaks if abs(b) < _TAIL_LIMIT})
    cuts = [-_TAIL_LIMIT, *cuts, _TAIL_LIMIT]
    x, w = _legendre(n_nodes)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        # the tails carry almost no mass; split them where the density is
        # still appreciable so that n_nodes suffices
        sub = [a, b]
        if b - a > 8.0:
            sub = np.unique(np.clip([a, -8.0, -4.0, 0.0, 4.0, 8.0, b], a, b))
        for lo, hi in zip(sub[:-1], sub[1:]):
            half = 0.5 * (hi - lo)
            z = 0.5 * (hi + lo) + half * x
            dens = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
            total += half * float(np.dot(w, func(z) * dens))
    return total


def normal_efficiency(c: float) -> float:
    """Normal-model efficiency of the bisquare M-estimator of regression."""
    spec = RhoSpec(c)
    num = normal_expectation(lambda z: psi_prime(spec, z), (-c, c)) ** 2
    den = normal_expectation(lambda z: psi(spec, z) ** 2, (-c, c))
    return num / den


def _bracket_root(f, lo, hi, grow=2.0, max_expand=60):
    flo, fhi = f(lo), f(hi)
    k = 0
    while np.sign(flo) == np.sign(fhi):
        if k >= max_expand:
            raise ValueError("could not bracket the tuning constant")
        lo, hi = lo / grow, hi * grow
        flo, fhi = f(lo), f(hi)
        k += 1
    return lo, hi


@lru_cache(maxsize=None)
def tune_for_scale_consistency(b: float = 0.5) -> float:
    """Tuning constant c such that E_Phi[rho_c(Z)] = b.

    Makes the M-scale with ``rho_c`` and ``b`` consistent for the standard
    deviation at the normal model.
    """
    if not 0.0 < b < 1.0:
        raise ValueError(f"b must lie in (0, 1), got {b!r}")

    def f(c):
        return normal_expectation(lambda z: rho(RhoSpec(c), z), (-c, c)) - b

    lo, hi = _bracket_root(f, 0.5, 4.0)
    return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


@lru_cache(maxsize=None)
def tune_for_efficiency(eff: float = 0.85) -> float:
    """Tuning constant c giving normal efficiency ``eff`` for the bisquare."""
    if not 0.0 < eff < 1.0:
        raise ValueError(f"efficiency must lie in (0, 1), got {eff!r}")

    def f(c):
        return normal_efficiency(c) - eff

    lo, hi = _bracket_root(f, 1.0, 6.0, grow=1.5)
    return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


C0_DEFAULT = tune_for_scale_consistency(0.5)
C1_DEFAULT = tune_for_efficiency(0.85)
