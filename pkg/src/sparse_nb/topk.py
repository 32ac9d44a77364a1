"""Top-k selection with deterministic (lower index first) tie-breaking."""

import numpy as np


def _check_k(k, m):
    if not 0 <= k <= m:
        raise ValueError(f"k={k} out of range [0, {m}]")


def topk_indices(z, k: int) -> np.ndarray:
    """Sorted indices of the ``k`` largest entries of ``z``.

    Among equal values the lower index wins. Expected O(m) via partition.
    """
    z = np.asarray(z, dtype=np.float64)
    m = len(z)
    _check_k(k, m)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k == m:
        return np.arange(m, dtype=np.int64)
    kth = np.partition(z, m - k)[m - k]
    above = np.flatnonzero(z > kth)
    tied = np.flatnonzero(z == kth)
    picked = np.concatenate([above, tied[: k - len(above)]])
    picked.sort()
    return picked


def topk_sum(z, k: int) -> float:
    """Sum of the ``k`` largest entries of ``z`` (``s_k`` in the literature)."""
    z = np.asarray(z, dtype=np.float64)
    m = len(z)
    _check_k(k, m)
    if k == 0:
        return 0.0
    return float(np.partition(z, m - k)[m - k:].sum())
