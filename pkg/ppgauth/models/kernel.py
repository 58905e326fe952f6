from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ppgauth.errors import InvalidInput


def resolve_gamma(gamma: float | str, x: np.ndarray) -> float:
    """'scale' means 1 / (n_features · Var(x)), falling back to 1 for constant data."""
    if gamma == "scale":
        var = float(np.var(x))
        return 1.0 / (x.shape[1] * var) if var > 0 else 1.0
    value = float(gamma)
    if value <= 0:
        raise InvalidInput(f"gamma must be positive, got {value}")
    return value


def rbf(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean"))


def check_finite(x: np.ndarray, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInput(f"{what} needs a non-empty 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"{what} input has non-finite values")
    return x
