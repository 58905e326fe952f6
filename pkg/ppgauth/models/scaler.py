from __future__ import annotations

from typing import Any

import numpy as np

from ppgauth.errors import InvalidInput
from ppgauth.schemas import ArrayModel
from ppgauth.utils.codec import decode_array, encode_array


class Scaler(ArrayModel):
    """Per-feature standardization; zero-variance features are only centered."""

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - self.mean) / self.scale

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.atleast_2d(z) * self.scale + self.mean

    def to_payload(self) -> dict[str, Any]:
        return {"mean": encode_array(self.mean), "scale": encode_array(self.scale)}

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> Scaler:
        return cls(mean=decode_array(payload["mean"]), scale=decode_array(payload["scale"]))


def fit_scaler(x: np.ndarray) -> Scaler:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInput("scaler needs a non-empty 2-D matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("scaler input has non-finite values")
    sd = x.std(axis=0)
    return Scaler(mean=x.mean(axis=0), scale=np.where(sd > 0, sd, 1.0))
