import numpy as np


def kfold_indices(n: int, folds: int, rng: np.random.Generator):
    """Shuffled, nearly equal-sized folds; returns a list of test-index arrays."""
    if folds < 2 or n < folds:
        raise ValueError(f"cannot split {n} observations into {folds} folds")
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def select_min(criterion: np.ndarray, prefer: str) -> int:
    """Index of the smallest finite criterion value.

    Exact ties go to the first (``prefer="first"``) or last (``"last"``)
    candidate; candidates are assumed sorted ascending.
    """
    finite = np.isfinite(criterion)
    if not finite.any():
        raise RuntimeError("every candidate was disqualified")
    best = np.min(criterion[finite])
    idx = np.flatnonzero(finite & (criterion == best))
    return int(idx[0] if prefer == "first" else idx[-1])
