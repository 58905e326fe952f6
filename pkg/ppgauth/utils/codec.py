"""
File helpers: JSON for fitted artifacts, guarded reads for every input file.

Arrays travel as {"shape": [...], "data": <base64 of little-endian f64>} so a
reload reproduces every value bit for bit.
"""
from __future__ import annotations

import base64
import json
import re
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ppgauth.errors import ParseError

_LE_F64 = np.dtype("<f8")


def encode_array(values: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(values, dtype=_LE_F64)
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def decode_array(doc: dict[str, Any]) -> np.ndarray:
    try:
        raw = base64.b64decode(doc["data"], validate=True)
        shape = tuple(int(s) for s in doc["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed array field: {exc}") from exc
    arr = np.frombuffer(raw, dtype=_LE_F64)
    if arr.size != int(np.prod(shape, dtype=np.int64)):
        raise ParseError(f"array payload of {arr.size} values does not fit shape {shape}")
    return arr.reshape(shape).astype(np.float64)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(dumps(doc))


def read_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        return json.loads(read_text(p))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=p, line=exc.lineno) from exc


# ─── Guarded reads ────────────────────────────────────────────────────────────

def read_bytes(path: str | Path) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise ParseError("file not found", path=p)
    try:
        return p.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=p) from exc


def read_text(path: str | Path) -> str:
    p = Path(path)
    try:
        return read_bytes(p).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text (byte {exc.start})", path=p) from exc


def read_table(path: str | Path, **kwargs: Any) -> pd.DataFrame:
    """`pd.read_csv` whose failures surface as ParseError with the file path."""
    p = Path(path)
    if not p.is_file():
        raise ParseError("file not found", path=p)
    try:
        return pd.read_csv(p, **kwargs)
    except pd.errors.EmptyDataError as exc:
        raise ParseError("empty file", path=p, line=1) from exc
    except pd.errors.ParserError as exc:
        raise ParseError(str(exc), path=p, line=_line_of(str(exc))) from exc
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(str(exc), path=p) from exc
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=p) from exc


def _line_of(message: str) -> int | None:
    # pandas reports "... in line 4, saw 3" for ragged rows
    match = re.search(r"line (\d+)", message)
    return int(match.group(1)) if match else None
