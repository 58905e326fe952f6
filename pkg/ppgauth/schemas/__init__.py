"""
Domain types for every pipeline stage (pydantic v2).

Array-carrying models allow numpy arrays and validate shape/finiteness on
construction; they are frozen so stages return new objects instead of
mutating their inputs.
"""
from __future__ import annotations

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


# ─── Enums ────────────────────────────────────────────────────────────────────

class TraceStage(str, Enum):
    raw = "raw"
    detrended = "detrended"
    filtered = "filtered"


class CaptureIssue(str, Enum):
    red_channel_low = "red_channel_low"
    luma_jump = "luma_jump"
    too_short = "too_short"


class FtaReason(str, Enum):
    max_bpm = "max_bpm"
    peak_count = "peak_count"
    dtw_distance = "dtw_distance"


class Confidence(str, Enum):
    exact = "exact"
    fallback = "fallback"


class DatasetVariant(str, Enum):
    ALL = "ALL"
    PostFTA = "PostFTA"


# ─── Ingest ───────────────────────────────────────────────────────────────────

class FrameStream(ArrayModel):
    """Planar RGB8 frames, shape (frame_count, 3, height, width)."""

    width: int = Field(gt=0)
    height: int = Field(gt=0)
    fps: float = Field(gt=0)
    frames: np.ndarray

    @model_validator(mode="after")
    def _check_frames(self) -> FrameStream:
        f = self.frames
        if f.dtype != np.uint8 or f.ndim != 4:
            raise ValueError("frames must be a uint8 array of shape (m, 3, height, width)")
        if f.shape[0] < 1:
            raise ValueError("frame stream is empty")
        if f.shape[1:] != (3, self.height, self.width):
            raise ValueError(f"frames shape {f.shape[1:]} != (3, {self.height}, {self.width})")
        return self

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])


_STAGE_ORDER = {TraceStage.raw: 0, TraceStage.detrended: 1, TraceStage.filtered: 2}


class Trace(ArrayModel):
    samples: np.ndarray
    fps: float = Field(gt=0)
    user_id: str = "unknown"
    session_id: str = "unknown"
    stage: TraceStage = TraceStage.raw
    meta: dict[str, Any] = Field(default_factory=dict)  # provenance

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("trace samples must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trace samples must be finite")
        return arr

    @property
    def duration(self) -> float:
        return len(self.samples) / self.fps

    def advance(self, samples: np.ndarray, stage: TraceStage, **meta: Any) -> Trace:
        """Next-stage copy; stages only move raw → detrended → filtered."""
        if _STAGE_ORDER[stage] != _STAGE_ORDER[self.stage] + 1:
            raise ValueError(f"illegal stage transition {self.stage.value} -> {stage.value}")
        return self.model_copy(update={"samples": samples, "stage": stage, "meta": {**self.meta, **meta}})


class ValidationVerdict(BaseModel):
    accepted: bool
    reasons: list[CaptureIssue] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self) -> ValidationVerdict:
        if self.accepted != (not self.reasons):
            raise ValueError("accepted must hold exactly when there are no reasons")
        return self

    @classmethod
    def from_reasons(cls, reasons: list[CaptureIssue]) -> ValidationVerdict:
        return cls(accepted=not reasons, reasons=reasons)


# ─── Beats ────────────────────────────────────────────────────────────────────

class Beat(ArrayModel):
    """Samples [start_index, end_index) of a filtered trace."""

    samples: np.ndarray
    start_index: int = Field(ge=0)
    end_index: int
    fps: float = Field(gt=0)
    user_id: str = "unknown"
    session_id: str = "unknown"
    trace_name: str | None = None

    @field_validator("samples", mode="before")
    @classmethod
    def _as_float(cls, v: Any) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValueError("beat samples must be a finite 1-D sequence")
        return arr

    @model_validator(mode="after")
    def _bounds(self) -> Beat:
        if self.end_index <= self.start_index:
            raise ValueError("end_index must exceed start_index")
        if len(self.samples) != self.end_index - self.start_index:
            raise ValueError("samples length must equal end_index - start_index")
        return self

    @property
    def length(self) -> int:
        return self.end_index - self.start_index

    @property
    def duration(self) -> float:
        return self.length / self.fps

    @property
    def bpm(self) -> float:
        return 60.0 * self.fps / self.length


class FiducialPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    amplitude: float


class FiducialSet(BaseModel):
    """Landmarks of one beat; indices are relative to the beat start."""

    model_config = ConfigDict(frozen=True)

    sp: FiducialPoint
    dn: FiducialPoint
    dp: FiducialPoint
    a1: FiducialPoint
    b1: FiducialPoint
    a2: FiducialPoint
    b2: FiducialPoint
    confidence: Confidence

    def ordered(self) -> bool:
        return self.a1.index <= self.sp.index <= self.dn.index <= self.dp.index


class QualityVerdict(BaseModel):
    fta: bool
    reasons: list[FtaReason] = Field(default_factory=list)
    dtw_value: float

    @model_validator(mode="after")
    def _consistent(self) -> QualityVerdict:
        if self.fta != bool(self.reasons):
            raise ValueError("fta must hold exactly when there are reasons")
        return self


class BeatRecord(BaseModel):
    """One row of the beats CSV."""

    trace: str
    user_id: str
    session_id: str
    start_index: int
    end_index: int
    fps: float
    fta: bool
    reasons: list[FtaReason] = Field(default_factory=list)
    dtw_value: float
    fiducials: dict[str, int] = Field(default_factory=dict)
    confidence: Confidence = Confidence.exact


# ─── Features ─────────────────────────────────────────────────────────────────

class NormalizedBeat(ArrayModel):
    samples: np.ndarray
    original_duration_s: float
    original_min: float
    original_max: float


class FeatureVector(ArrayModel):
    values: np.ndarray
    names: tuple[str, ...]
    user_id: str
    session_id: str
    fta: bool = False

    @model_validator(mode="after")
    def _shape(self) -> FeatureVector:
        if self.values.shape != (len(self.names),):
            raise ValueError("values and names must have the same length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")
        return self


class FeatureMatrix(ArrayModel):
    """Labelled rows of features; `values` has shape (rows, len(names))."""

    values: np.ndarray
    names: tuple[str, ...]
    user_ids: np.ndarray
    session_ids: np.ndarray
    fta: np.ndarray

    @model_validator(mode="after")
    def _shape(self) -> FeatureMatrix:
        n = self.values.shape[0]
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError("values must be 2-D with one column per name")
        if not (len(self.user_ids) == len(self.session_ids) == len(self.fta) == n):
            raise ValueError("label arrays must have one entry per row")
        return self

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector]) -> FeatureMatrix:
        if not vectors:
            raise ValueError("no feature vectors")
        return cls(
            values=np.vstack([v.values for v in vectors]),
            names=vectors[0].names,
            user_ids=np.array([v.user_id for v in vectors], dtype=object),
            session_ids=np.array([v.session_id for v in vectors], dtype=object),
            fta=np.array([v.fta for v in vectors], dtype=bool),
        )

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    def rows(self, mask_or_index: np.ndarray) -> FeatureMatrix:
        return FeatureMatrix(
            values=self.values[mask_or_index],
            names=self.names,
            user_ids=self.user_ids[mask_or_index],
            session_ids=self.session_ids[mask_or_index],
            fta=self.fta[mask_or_index],
        )

    def columns(self, names: list[str] | tuple[str, ...]) -> np.ndarray:
        index = {n: i for i, n in enumerate(self.names)}
        return self.values[:, [index[n] for n in names]]

    def variant(self, variant: DatasetVariant | str) -> FeatureMatrix:
        if DatasetVariant(variant) is DatasetVariant.PostFTA:
            return self.rows(~self.fta)
        return self


# ─── Evaluation ───────────────────────────────────────────────────────────────

class AttemptSet(BaseModel):
    user_id: str
    genuine_scores: list[float]
    impostor_scores: list[float]
    window: int
    protocol: str
    classifier: str
    enrol: int | None = None
    dataset_variant: DatasetVariant = DatasetVariant.PostFTA


class EvalCell(BaseModel):
    """EER of one user under one (protocol, classifier, window, enrolment) setting."""

    protocol: str
    classifier: str
    user_id: str
    window: int
    enrol: int | None = None
    eer: float = Field(ge=0, le=1)
    eers: list[float]          # one per fold / repeated enrolment
    threshold: float
    n_genuine: int
    n_impostor: int
    far: list[float] = Field(default_factory=list)
    frr: list[float] = Field(default_factory=list)


class EvalSummary(BaseModel):
    protocol: str
    classifier: str
    window: int
    enrol: int | None = None
    mean_eer: float
    median_eer: float
    n_users: int


class EvalReport(BaseModel):
    dataset_variant: DatasetVariant
    n_rows: int
    n_users: int
    variant_counts: dict[str, int] = Field(default_factory=dict)  # rows in ALL and PostFTA
    config: dict[str, Any]
    cells: list[EvalCell] = Field(default_factory=list)
    summaries: list[EvalSummary] = Field(default_factory=list)
    skipped: list[str] = Field(default_factory=list)


class BreakdownRow(BaseModel):
    protocol: str
    classifier: str
    window: int
    enrol: int | None
    user_id: str
    eer: float
    ci_low: float
    ci_high: float


class BreakdownTable(BaseModel):
    rows: list[BreakdownRow] = Field(default_factory=list)
    worst_user: str | None = None
    worst_eer: float | None = None
