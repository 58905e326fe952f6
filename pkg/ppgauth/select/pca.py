"""PCA compression of the frequency and width feature groups."""
from __future__ import annotations

from typing import Any

import numpy as np

from ppgauth.errors import InvalidInput
from ppgauth.schemas import ArrayModel
from ppgauth.utils.codec import decode_array, encode_array
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)


class PcaBasis(ArrayModel):
    """Mean vector, principal axes (rows) and the number of axes used for projection."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    n_retained: int

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - self.mean) @ self.components[: self.n_retained].T

    def reconstruct(self, projected: np.ndarray) -> np.ndarray:
        return projected @ self.components[: self.n_retained] + self.mean

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean": encode_array(self.mean),
            "components": encode_array(self.components),
            "explained_variance": encode_array(self.explained_variance),
            "n_retained": self.n_retained,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> PcaBasis:
        return cls(
            mean=decode_array(doc["mean"]),
            components=decode_array(doc["components"]),
            explained_variance=decode_array(doc["explained_variance"]),
            n_retained=int(doc["n_retained"]),
        )


def fit_pca(x: np.ndarray, max_components: int, variance_target: float = 0.99) -> PcaBasis:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidInput("PCA needs a 2-D matrix with at least two rows")
    rows, cols = x.shape
    limit = min(max_components, rows, cols)
    if limit < max_components:
        logger.warning("select.pca_components_clamped", requested=max_components, used=limit, rows=rows)

    mean = x.mean(axis=0)
    _, s, vt = np.linalg.svd(x - mean, full_matrices=False)
    # largest-magnitude loading of every axis is positive
    pivot = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(vt.shape[0]), pivot])
    signs[signs == 0] = 1.0
    vt = vt * signs[:, None]
    eigen = s**2 / (rows - 1)

    total = eigen.sum()
    if total <= 0.0:
        logger.warning("select.pca_degenerate", rows=rows, cols=cols)
        n = 1
    else:
        ratio = np.cumsum(eigen) / total
        n = int(np.searchsorted(ratio, variance_target - 1e-12)) + 1
    n = min(n, limit)
    return PcaBasis(
        mean=mean,
        components=vt[:limit],
        explained_variance=eigen[:limit],
        n_retained=n,
    )
