"""Correlation drop and percentile outlier handling."""
from __future__ import annotations

import numpy as np


def correlation_filter(
    x: np.ndarray,
    names: list[str] | tuple[str, ...],
    threshold: float = 0.95,
    rng: np.random.Generator | None = None,
) -> list[str]:
    """Greedy pass over column pairs in order; of each pair with |r| > threshold one is dropped at random."""
    rng = rng if rng is not None else np.random.default_rng(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.nan_to_num(np.corrcoef(np.asarray(x, dtype=np.float64), rowvar=False), nan=0.0)
    r = np.atleast_2d(r)
    alive = np.ones(len(names), dtype=bool)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if not alive[i]:
                break
            if alive[j] and abs(r[i, j]) > threshold:
                alive[i if rng.integers(2) == 0 else j] = False
    return [n for n, keep in zip(names, alive) if not keep]


def percentile_bounds(x: np.ndarray, low: float = 1.0, high: float = 99.0) -> np.ndarray:
    """(2, d) array of per-column lower and upper percentiles."""
    return np.percentile(np.asarray(x, dtype=np.float64), [low, high], axis=0)


def outlier_rows(x: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.any((x < bounds[0]) | (x > bounds[1]), axis=1)


def percentile_clip(x: np.ndarray, low: float = 1.0, high: float = 99.0) -> tuple[np.ndarray, np.ndarray]:
    """Training-time step: returns (keep mask over rows, bounds)."""
    bounds = percentile_bounds(x, low, high)
    return ~outlier_rows(x, bounds), bounds


def clamp(x: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.clip(x, bounds[0], bounds[1])
