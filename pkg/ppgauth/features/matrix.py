"""Feature matrix CSV: one column per feature name, then user, session and fta."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from ppgauth.errors import ParseError
from ppgauth.schemas import FeatureMatrix
from ppgauth.utils.codec import read_table

LABEL_COLUMNS = ("user", "session", "fta")


def write_features_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    frame = pd.DataFrame(matrix.values, columns=list(matrix.names))
    frame["user"] = matrix.user_ids
    frame["session"] = matrix.session_ids
    frame["fta"] = matrix.fta.astype(int)
    frame.to_csv(path, index=False, float_format="%.17g")


def read_features_csv(path: str | Path) -> FeatureMatrix:
    p = Path(path)
    frame = read_table(p, dtype={"user": str, "session": str}, keep_default_na=False)
    missing = [c for c in LABEL_COLUMNS if c not in frame.columns]
    if missing:
        raise ParseError(f"missing columns {missing}", path=p, line=1)
    names = tuple(c for c in frame.columns if c not in LABEL_COLUMNS)
    try:
        values = frame[list(names)].to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"non-numeric feature cell: {exc}", path=p) from exc
    bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
    if bad.size:
        raise ParseError("non-finite feature value", path=p, line=int(bad[0]) + 2)
    try:
        fta = frame["fta"].astype(int).to_numpy().astype(bool)
    except ValueError as exc:
        raise ParseError(f"fta column must hold 0 or 1: {exc}", path=p) from exc
    return FeatureMatrix(
        values=values,
        names=names,
        user_ids=frame["user"].to_numpy(dtype=object),
        session_ids=frame["session"].to_numpy(dtype=object),
        fta=fta,
    )
