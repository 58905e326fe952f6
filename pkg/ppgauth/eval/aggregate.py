"""Aggregation windows: n samples drawn without replacement inside a draw, independently across draws."""
from __future__ import annotations

import numpy as np

from ppgauth.errors import InvalidInput

REDUCERS = {"mean": np.mean, "median": np.median}


def draw_windows(
    count: int,
    n: int,
    draws: int,
    rng: np.random.Generator,
    sampling: str = "random",
) -> np.ndarray:
    """(draws, n) index array. 'exhaustive' splits one permutation into disjoint windows."""
    if n < 1:
        raise InvalidInput(f"window size must be positive, got {n}")
    if n > count:
        raise InvalidInput(f"window of {n} exceeds the {count} available samples")
    if sampling == "exhaustive":
        order = rng.permutation(count)
        windows = order[: (count // n) * n].reshape(-1, n)
        return windows[:draws]
    if sampling != "random":
        raise InvalidInput(f"unknown sampling mode {sampling!r}")
    return np.argsort(rng.random((draws, count)), axis=1)[:, :n]


def aggregate_scores(
    scores,
    n: int,
    draws: int,
    rng: np.random.Generator | int = 0,
    fn: str = "mean",
    sampling: str = "random",
) -> np.ndarray:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    values = np.asarray(scores, dtype=np.float64)
    windows = draw_windows(values.size, n, draws, rng, sampling)
    return REDUCERS[fn](values[windows], axis=1)


def aggregate_rows(rows: np.ndarray, windows: np.ndarray, fn: str = "mean") -> np.ndarray:
    """Feature-vector aggregation: one reduced row per window."""
    return REDUCERS[fn](rows[windows], axis=1)
