"""
Two-step feature selection
──────────────────────────
1. PCA on the fft_* and width_* groups, each keeping the fewest axes that
   explain the configured share of variance.
2. On the compressed set: seeded correlation drop, percentile outlier removal,
   then mRMR (MIQ) and RMI rankings; the result is the intersection, ordered
   by mRMR score.

Every statistic is fitted on the rows handed to `fit_selection`, so callers
pass training rows only.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from pydantic import Field

from ppgauth.config import SelectionConfig
from ppgauth.errors import InvalidInput, ParseError, SelectionEmpty
from ppgauth.schemas import ArrayModel, FeatureMatrix
from ppgauth.select.filters import clamp, correlation_filter, percentile_clip
from ppgauth.select.mutual_info import Ranking, mrmr_rank, rmi_rank
from ppgauth.select.pca import PcaBasis, fit_pca
from ppgauth.utils.codec import decode_array, encode_array, read_json, write_json
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

SELECTION_VERSION = 1


def finalize(mrmr_kept: Ranking, rmi_kept: Ranking) -> list[str]:
    """Features kept by both rankings, by mRMR score descending (pick order on ties)."""
    rmi_names = {name for name, _ in rmi_kept}
    shared = [(name, score) for name, score in mrmr_kept if name in rmi_names]
    selected = [name for name, _ in sorted(shared, key=lambda item: -item[1])]
    if not selected:
        raise SelectionEmpty("mRMR and RMI kept disjoint feature sets")
    return selected


class SelectionModel(ArrayModel):
    seed: int
    input_names: tuple[str, ...]
    fft_pca: PcaBasis
    width_pca: PcaBasis
    compressed_names: tuple[str, ...]
    dropped_correlated: list[str] = Field(default_factory=list)
    clip_names: tuple[str, ...]
    clip_bounds: np.ndarray
    mrmr_scores: dict[str, float]
    rmi_scores: dict[str, float]
    selected: list[str]

    # ── transform ────────────────────────────────────────────────────────────

    def compress(self, values: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
        """Raw feature columns → compressed columns in `compressed_names` order."""
        if tuple(names) != self.input_names:
            raise InvalidInput("feature columns differ from the ones the selection was fitted on")
        return _compress(values, names, self.fft_pca, self.width_pca)

    def transform(self, values: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
        """Selected columns of clamped compressed features; shape (rows, len(selected))."""
        compressed = self.compress(np.atleast_2d(values), names)
        index = {n: i for i, n in enumerate(self.compressed_names)}
        clipped = clamp(compressed[:, [index[n] for n in self.clip_names]], self.clip_bounds)
        clip_index = {n: i for i, n in enumerate(self.clip_names)}
        return clipped[:, [clip_index[n] for n in self.selected]]

    def transform_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.transform(matrix.values, matrix.names)

    # ── persistence ──────────────────────────────────────────────────────────

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": "selection",
            "version": SELECTION_VERSION,
            "seed": self.seed,
            "input_names": list(self.input_names),
            "fft_pca": self.fft_pca.to_dict(),
            "width_pca": self.width_pca.to_dict(),
            "compressed_names": list(self.compressed_names),
            "dropped_correlated": self.dropped_correlated,
            "clip_names": list(self.clip_names),
            "clip_bounds": encode_array(self.clip_bounds),
            "mrmr_scores": self.mrmr_scores,
            "rmi_scores": self.rmi_scores,
            "selected": self.selected,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> SelectionModel:
        if doc.get("type") != "selection":
            raise ParseError(f"not a selection model (type={doc.get('type')!r})")
        return cls(
            seed=int(doc["seed"]),
            input_names=tuple(doc["input_names"]),
            fft_pca=PcaBasis.from_dict(doc["fft_pca"]),
            width_pca=PcaBasis.from_dict(doc["width_pca"]),
            compressed_names=tuple(doc["compressed_names"]),
            dropped_correlated=list(doc["dropped_correlated"]),
            clip_names=tuple(doc["clip_names"]),
            clip_bounds=decode_array(doc["clip_bounds"]),
            mrmr_scores={k: float(v) for k, v in doc["mrmr_scores"].items()},
            rmi_scores={k: float(v) for k, v in doc["rmi_scores"].items()},
            selected=list(doc["selected"]),
        )


def _group(names: tuple[str, ...], prefix: str) -> list[int]:
    return [i for i, n in enumerate(names) if n.startswith(prefix)]


def _compress(values: np.ndarray, names: tuple[str, ...], fft_pca: PcaBasis, width_pca: PcaBasis) -> np.ndarray:
    fft, width = _group(names, "fft_"), _group(names, "width_")
    grouped = set(fft) | set(width)
    other = [i for i in range(len(names)) if i not in grouped]
    return np.hstack([
        values[:, other],
        width_pca.transform(values[:, width]),
        fft_pca.transform(values[:, fft]),
    ])


def compressed_names(names: tuple[str, ...], fft_pca: PcaBasis, width_pca: PcaBasis) -> tuple[str, ...]:
    other = tuple(n for n in names if not n.startswith(("fft_", "width_")))
    return (
        other
        + tuple(f"width_pc{k:02d}" for k in range(width_pca.n_retained))
        + tuple(f"fft_pc{k:02d}" for k in range(fft_pca.n_retained))
    )


def fit_selection(matrix: FeatureMatrix, cfg: SelectionConfig | None = None, seed: int = 0) -> SelectionModel:
    cfg = cfg or SelectionConfig()
    names = tuple(matrix.names)
    values = matrix.values
    fft, width = _group(names, "fft_"), _group(names, "width_")
    if not fft or not width:
        raise InvalidInput("feature matrix has no fft_* or width_* columns")

    fft_pca = fit_pca(values[:, fft], cfg.fft_max_components, cfg.variance_target)
    width_pca = fit_pca(values[:, width], cfg.width_max_components, cfg.variance_target)
    c_names = compressed_names(names, fft_pca, width_pca)
    compressed = _compress(values, names, fft_pca, width_pca)

    rng = np.random.default_rng(seed)
    dropped = correlation_filter(compressed, c_names, cfg.corr_threshold, rng)
    clip_names = tuple(n for n in c_names if n not in set(dropped))
    kept_cols = compressed[:, [c_names.index(n) for n in clip_names]]

    keep_rows, bounds = percentile_clip(kept_cols, cfg.clip_low, cfg.clip_high)
    train = kept_cols[keep_rows]
    labels = matrix.user_ids[keep_rows]

    mrmr = mrmr_rank(train, clip_names, labels, cfg.keep_fraction, cfg.mrmr_bins)
    rmi = rmi_rank(train, clip_names, labels, cfg.keep_fraction, cfg.rmi_k)
    selected = finalize(mrmr, rmi)

    logger.info(
        "select.fitted",
        rows=matrix.n_rows,
        rows_after_clip=int(keep_rows.sum()),
        n_fft=fft_pca.n_retained,
        n_width=width_pca.n_retained,
        dropped=len(dropped),
        selected=len(selected),
    )
    return SelectionModel(
        seed=seed,
        input_names=names,
        fft_pca=fft_pca,
        width_pca=width_pca,
        compressed_names=c_names,
        dropped_correlated=dropped,
        clip_names=clip_names,
        clip_bounds=bounds,
        mrmr_scores=dict(mrmr),
        rmi_scores=dict(rmi),
        selected=selected,
    )


def save_selection(model: SelectionModel, path: str | Path) -> None:
    write_json(model.to_dict(), path)


def load_selection(path: str | Path) -> SelectionModel:
    return SelectionModel.from_dict(read_json(path))
