"""Simulation designs: carriers, coefficients and error laws of the benchmark."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "ErrorLaw",
    "Dataset",
    "ScenarioConfig",
    "scenario_config",
    "generate_scenario",
    "draw_carriers",
    "draw_errors",
    "ar_covariance",
    "SCENARIO_IDS",
]

SCENARIO_IDS = (1, 2, 3, 4, 5, 6)


class ErrorLaw(str, enum.Enum):
    NORMAL = "normal"
    T3 = "t3"
    T1 = "t1"

    @property
    def df(self) -> float | None:
        return {"normal": None, "t3": 3.0, "t1": 1.0}[self.value]

    @property
    def accuracy_metric(self) -> str:
        # t(1) has no mean, so prediction error is summarised by the median
        return "MAD" if self is ErrorLaw.T1 else "RMSE"


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class ScenarioConfig:
    """One benchmark design.

    ``blocks`` lists ``(size, rho)`` pairs: carriers are Gaussian AR(rho)
    within a block and independent across blocks.  ``sigma`` is the error
    standard deviation for normal errors; Student-t errors are unscaled.
    """

    id: int
    n: int
    p: int
    beta0: tuple
    sigma: float
    blocks: tuple
    error_law: ErrorLaw = ErrorLaw.NORMAL

    def __post_init__(self):
        if len(self.beta0) != self.p or sum(b for b, _ in self.blocks) != self.p:
            raise ValueError("beta0 and blocks must match p")

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.beta0, dtype=np.float64)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    @property
    def covariance(self) -> np.ndarray:
        S = np.zeros((self.p, self.p))
        start = 0
        for size, rho in self.blocks:
            S[start:start + size, start:start + size] = ar_covariance(size, rho)
            start += size
        return S


def ar_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(np.subtract.outer(idx, idx)).astype(np.float64)


def _huang_beta(p):
    b = np.zeros(p)
    b[0:5], b[5:10], b[10:15] = 2.5, 1.5, 0.5
    return tuple(b)


def _fan_beta(p):
    b = np.zeros(p)
    b[0], b[1], b[5] = 3.0, 1.5, 2.0
    return tuple(b)


_BASE = {
    1: ScenarioConfig(1, 40, 8, _fan_beta(8), 3.0, ((8, 0.5),)),
    2: ScenarioConfig(2, 60, 8, _fan_beta(8), 1.0, ((8, 0.5),)),
    3: ScenarioConfig(3, 100, 30, _huang_beta(30), 1.5, ((30, 0.95),)),
    4: ScenarioConfig(4, 100, 200, _huang_beta(200), 1.5, ((15, 0.5), (185, 0.5))),
    5: ScenarioConfig(5, 100, 200, _huang_beta(200), 1.5, ((15, 0.95), (185, 0.95))),
    6: ScenarioConfig(6, 50, 250, _fan_beta(250), 3.0, ((250, 0.5),)),
}


def scenario_config(scenario_id: int, errors: str | ErrorLaw = ErrorLaw.NORMAL,
                    n: int | None = None) -> ScenarioConfig:
    """Configuration of a numbered scenario, optionally with a different ``n``."""
    try:
        cfg = _BASE[int(scenario_id)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown scenario {scenario_id!r}; expected one of {SCENARIO_IDS}") from None
    cfg = replace(cfg, error_law=ErrorLaw(errors))
    if n is not None:
        if n < 2:
            raise ValueError("n must be at least 2")
        cfg = replace(cfg, n=int(n))
    return cfg


def draw_carriers(cfg: ScenarioConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian AR(rho) blocks via the exact stationary recursion."""
    Z = rng.standard_normal((n, cfg.p))
    X = np.empty_like(Z)
    start = 0
    for size, rho in cfg.blocks:
        innov = np.sqrt(1.0 - rho * rho)
        X[:, start] = Z[:, start]
        for j in range(start + 1, start + size):
            X[:, j] = rho * X[:, j - 1] + innov * Z[:, j]
        start += size
    return X


def draw_errors(cfg: ScenarioConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(n)
    df = cfg.error_law.df
    if df is None:
        return cfg.sigma * z
    chi2 = rng.chisquare(df, n)
    return z / np.sqrt(chi2 / df)


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator):
    """Independent training and test samples of size ``cfg.n``."""
    beta = cfg.beta
    out = []
    for _ in range(2):
        X = draw_carriers(cfg, cfg.n, rng)
        y = X @ beta + draw_errors(cfg, cfg.n, rng)
        out.append(Dataset(X, y))
    return out[0], out[1]
