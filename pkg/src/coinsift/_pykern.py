"""Pure-numpy fallback for the clustering hot kernels.

Accumulation order is pinned to match coinsift._ckern bit-for-bit: squared
distances add one feature at a time (index ascending) into a single
accumulator array, and center sums fold rows in index order (np.add.at is
an ordered, unbuffered scatter-add).
"""

from __future__ import annotations

import numpy as np


def pairwise_sqdist(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance of every row to every center, (n, k)."""
    n = x.shape[0]
    k = centers.shape[0]
    out = np.zeros((n, k), dtype=np.float64)
    for j in range(x.shape[1]):
        diff = x[:, j, None] - centers[None, :, j]
        out += diff * diff
    return out


def assigned_sqdist(x: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Squared distance of each row to its labeled center, (n,)."""
    gathered = centers[labels]
    out = np.zeros(x.shape[0], dtype=np.float64)
    for j in range(x.shape[1]):
        diff = x[:, j] - gathered[:, j]
        out += diff * diff
    return out


def accumulate_centers(
    x: np.ndarray, labels: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster coordinate sums and member counts, rows folded in order."""
    sums = np.zeros((k, x.shape[1]), dtype=np.float64)
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    return sums, counts
