"""High-leverage contamination of a training sample."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import Dataset

__all__ = ["ContaminationSpec", "contaminate", "DEFAULT_Y0_GRID"]

DEFAULT_Y0_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0)


@dataclass(frozen=True)
class ContaminationSpec:
    fraction: float = 0.1
    y0_grid: tuple = DEFAULT_Y0_GRID
    leverage: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError("fraction must lie in [0, 1)")
        if any(v < 0 for v in self.y0_grid):
            raise ValueError("outlier sizes must be non-negative")

    def count(self, n: int) -> int:
        return int(np.floor(self.fraction * n + 1e-9))


def contaminate(train: Dataset, y0: float, spec: ContaminationSpec | None = None) -> Dataset:
    """Copy of ``train`` whose first ``floor(fraction n)`` rows are outliers.

    Each replaced row gets carrier ``(leverage, 0, ..., 0)`` and response
    ``leverage * y0``.
    """
    spec = spec or ContaminationSpec()
    if y0 < 0:
        raise ValueError("y0 must be non-negative")
    X = train.X.copy()
    y = train.y.copy()
    m = spec.count(train.n)
    X[:m] = 0.0
    X[:m, 0] = spec.leverage
    y[:m] = spec.leverage * y0
    return Dataset(X, y)
