"""
Model files
───────────
{"type", "version", "seed", "hyperparameters", "payload"}; arrays inside the
payload are base64 little-endian f64 (see ppgauth.utils.codec).
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Union

from ppgauth.errors import ParseError
from ppgauth.models.iforest import IsolationForestModel
from ppgauth.models.scaler import Scaler
from ppgauth.models.svm import OneClassSvmModel, SvmModel
from ppgauth.utils.codec import read_json, write_json

MODEL_VERSION = 1

AnyModel = Union[Scaler, SvmModel, OneClassSvmModel, IsolationForestModel]


def envelope(model: AnyModel, seed: int = 0) -> dict[str, Any]:
    if isinstance(model, Scaler):
        kind, hyper = "scaler", {}
    elif isinstance(model, SvmModel):
        kind, hyper = "svm", {"c": model.c, "gamma": model.gamma}
    elif isinstance(model, OneClassSvmModel):
        kind, hyper = "osvm", {"nu": model.nu, "gamma": model.gamma}
    elif isinstance(model, IsolationForestModel):
        kind, hyper, seed = "iforest", {"n_trees": model.n_trees, "max_samples": model.max_samples}, model.seed
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {
        "type": kind,
        "version": MODEL_VERSION,
        "seed": seed,
        "hyperparameters": hyper,
        "payload": model.to_payload(),
    }


def from_envelope(doc: dict[str, Any]) -> AnyModel:
    try:
        kind, hyper, payload = doc["type"], doc["hyperparameters"], doc["payload"]
        if doc["version"] != MODEL_VERSION:
            raise ParseError(f"unsupported model version {doc['version']}")
        if kind == "scaler":
            return Scaler.from_payload(payload)
        if kind == "svm":
            return SvmModel.from_payload(payload, hyper)
        if kind == "osvm":
            return OneClassSvmModel.from_payload(payload, hyper)
        if kind == "iforest":
            return IsolationForestModel.from_payload(payload, hyper, int(doc["seed"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model envelope: {exc}") from exc
    raise ParseError(f"unknown model type {kind!r}")


def save_model(model: AnyModel, path: str | Path, seed: int = 0) -> None:
    write_json(envelope(model, seed), path)


def load_model(path: str | Path) -> AnyModel:
    try:
        return from_envelope(read_json(path))
    except ParseError as exc:
        if exc.path is None:
            raise ParseError(str(exc), path=path) from exc
        raise
