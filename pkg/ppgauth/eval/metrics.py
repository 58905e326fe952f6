"""
Equal error rate
────────────────
Higher scores mean "more genuine". At threshold t

    FAR(t) = share of impostor scores ≥ t
    FRR(t) = share of genuine scores  < t

t sweeps the distinct scores plus one value above the maximum, so FAR − FRR
falls from 1 to −1. The EER sits where it first reaches 0: exactly at a grid
point (midpoint of a run of zeros) or linearly interpolated between the two
grid points around the sign change.
"""
from __future__ import annotations

import numpy as np

from ppgauth.errors import InvalidInput


def _scores(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidInput(f"{what} scores are empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{what} scores must be finite")
    return arr


def error_rates(genuine: np.ndarray, impostor: np.ndarray, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g, i = np.sort(genuine), np.sort(impostor)
    far = 1.0 - np.searchsorted(i, thresholds, side="left") / i.size
    frr = np.searchsorted(g, thresholds, side="left") / g.size
    return far, frr


def threshold_grid(genuine: np.ndarray, impostor: np.ndarray) -> np.ndarray:
    merged = np.unique(np.concatenate([genuine, impostor]))
    return np.append(merged, merged[-1] + 1.0)


def compute_eer(genuine, impostor) -> tuple[float, float]:
    """(eer, threshold)."""
    g, i = _scores(genuine, "genuine"), _scores(impostor, "impostor")
    t = threshold_grid(g, i)
    far, frr = error_rates(g, i, t)
    d = far - frr
    k = int(np.argmax(d <= 0))
    if d[k] == 0:
        last = k
        while last + 1 < d.size and d[last + 1] == 0:
            last += 1
        return float(far[k]), float((t[k] + t[last]) / 2.0)
    lam = d[k - 1] / (d[k - 1] - d[k])
    eer = far[k - 1] + lam * (far[k] - far[k - 1])
    return float(eer), float(t[k - 1] + lam * (t[k] - t[k - 1]))


def rate_curve(genuine, impostor, points: int = 21) -> tuple[list[float], list[float]]:
    """FAR and FRR sampled at evenly spaced quantiles of the merged scores."""
    g, i = _scores(genuine, "genuine"), _scores(impostor, "impostor")
    t = np.quantile(np.concatenate([g, i]), np.linspace(0.0, 1.0, points))
    far, frr = error_rates(g, i, t)
    return far.tolist(), frr.tolist()
