"""
Dynamic time warping with steps (1,0), (0,1), (1,1) and cost |a_i - b_j|.

The accumulated-cost table is filled one anti-diagonal at a time; cells on an
anti-diagonal only depend on the two previous ones, so each sweep is a single
vectorized update. Among equal-cost predecessors the shorter path wins, which
makes the path length (and the normalized distance) well defined.
"""
from __future__ import annotations

import numpy as np

from ppgauth.errors import InvalidInput

_NO_LENGTH = np.iinfo(np.int64).max


def dtw_table(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated cost D and optimal path length L, both of shape (n+1, m+1)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidInput("dtw needs two non-empty sequences")
    n, m = a.size, b.size
    cost = np.abs(a[:, None] - b[None, :])
    D = np.full((n + 1, m + 1), np.inf)
    L = np.zeros((n + 1, m + 1), dtype=np.int64)
    D[0, 0] = 0.0

    for s in range(2, n + m + 1):
        i = np.arange(max(1, s - m), min(n, s - 1) + 1)
        j = s - i
        pred_cost = np.stack((D[i - 1, j - 1], D[i - 1, j], D[i, j - 1]))
        pred_len = np.stack((L[i - 1, j - 1], L[i - 1, j], L[i, j - 1]))
        best = pred_cost.min(axis=0)
        shortest = np.where(pred_cost == best, pred_len, _NO_LENGTH).min(axis=0)
        D[i, j] = cost[i - 1, j - 1] + best
        L[i, j] = shortest + 1
    return D, L


def dtw_cost(a: np.ndarray, b: np.ndarray) -> float:
    """Total cost of the optimal warping path."""
    D, _ = dtw_table(a, b)
    return float(D[-1, -1])


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Optimal path cost divided by the path length."""
    D, L = dtw_table(a, b)
    return float(D[-1, -1] / L[-1, -1])
