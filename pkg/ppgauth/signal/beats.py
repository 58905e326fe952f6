"""
Beats
─────
Heartbeat segmentation of a filtered trace, fiducial landmarks of single
beats, the average reference wave and the beats CSV.

Segmentation: smooth the trace with a moving average, take the relative
minima of the smoothed signal, and snap each one to the lowest raw sample
within ±g, where g = 60·fps/max_bpm is the shortest admissible beat.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
from scipy.ndimage import uniform_filter1d
from scipy.signal import argrelmin, find_peaks

from ppgauth.errors import DegenerateBeat, InvalidInput, ParseError
from ppgauth.schemas import (
    Beat,
    BeatRecord,
    Confidence,
    FiducialPoint,
    FiducialSet,
    FtaReason,
    Trace,
    TraceStage,
)
from ppgauth.utils.codec import read_table, read_text
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

TEMPLATE_LENGTH = 100
FIDUCIAL_KEYS = ("sp", "dn", "dp", "a1", "b1", "a2", "b2")


# ─── Segmentation ─────────────────────────────────────────────────────────────

def min_gap(fps: float, max_bpm: float) -> float:
    return 60.0 * fps / max_bpm


def merge_boundaries(candidates: list[int], samples: np.ndarray, gap: float) -> list[int]:
    """Merge sorted candidates closer than `gap`, keeping the deeper one (earlier on ties)."""
    kept: list[int] = []
    for b in candidates:
        if kept and b - kept[-1] < gap:
            if samples[b] < samples[kept[-1]]:
                kept[-1] = b
            continue
        kept.append(b)
    return kept


def find_boundaries(samples: np.ndarray, fps: float, max_bpm: float = 240.0, smoothing_window: int | None = None) -> list[int]:
    n = len(samples)
    g = min_gap(fps, max_bpm)
    reach = int(g)
    if n < 2 * g or reach < 1:
        return []
    ws = smoothing_window or max(1, int(round(0.25 * fps)))
    ws = 2 * (ws // 2) + 1  # odd width: a symmetric trough keeps a single smoothed minimum
    smoothed = uniform_filter1d(samples, size=ws, mode="nearest")
    snapped: set[int] = set()
    for i in argrelmin(smoothed)[0]:
        lo, hi = max(0, i - reach), min(n, i + reach + 1)
        snapped.add(lo + int(np.argmin(samples[lo:hi])))
    return merge_boundaries(sorted(snapped), samples, g)


def separate_beats(
    trace: Trace,
    max_bpm: float = 240.0,
    smoothing_window: int | None = None,
    skip_warmup: bool = False,
) -> list[Beat]:
    if trace.stage is not TraceStage.filtered:
        raise InvalidInput(f"separate_beats expects a filtered trace, got {trace.stage.value}")
    boundaries = find_boundaries(trace.samples, trace.fps, max_bpm, smoothing_window)
    warmup = int(trace.meta.get("warmup_samples", 0)) if skip_warmup else 0
    beats = [
        Beat(
            samples=trace.samples[start:end],
            start_index=start,
            end_index=end,
            fps=trace.fps,
            user_id=trace.user_id,
            session_id=trace.session_id,
            trace_name=trace.meta.get("source"),
        )
        for start, end in zip(boundaries[:-1], boundaries[1:])
        if start >= warmup
    ]
    logger.debug("beats.separated", user=trace.user_id, session=trace.session_id, beats=len(beats))
    return beats


# ─── Fiducials ────────────────────────────────────────────────────────────────

def _first_peak(segment: np.ndarray) -> int | None:
    peaks, _ = find_peaks(segment)
    return int(peaks[0]) if peaks.size else None


def _first_inflection(d2: np.ndarray, start: int) -> int | None:
    """First concave-to-convex zero crossing of the second derivative after `start`."""
    seg = d2[start:]
    crossings = np.flatnonzero((seg[:-1] < 0) & (seg[1:] >= 0))
    return start + int(crossings[0]) + 1 if crossings.size else None


def detect_fiducials(beat: Beat) -> FiducialSet:
    x = beat.samples
    n = len(x)
    if n < 8:
        raise InvalidInput(f"fiducial detection needs at least 8 samples, got {n}")
    d1 = np.gradient(x)
    d2 = np.gradient(d1)
    exact = True

    sp = int(np.argmax(x))
    a1 = int(np.argmax(d1[: sp + 1]))

    found = _first_peak(-d1[sp:])
    b1 = sp + found if found is not None else sp + int(np.argmin(d1[sp:]))

    found = _first_peak(-x[sp:])
    if found is not None:
        dn = sp + found
    else:
        exact = False
        inflection = _first_inflection(d2, sp)
        dn = inflection if inflection is not None else sp + (n - 1 - sp) // 2

    found = _first_peak(x[dn:])
    if found is not None:
        dp = dn + found
    else:
        exact = False
        dp = dn + 1 + int(np.argmax(x[dn + 1:])) if dn < n - 1 else dn

    found = _first_peak(d1[b1:])
    if found is not None:
        a2 = b1 + found
    else:
        exact = False
        a2 = dp

    found = _first_peak(-d1[a2:])
    if found is not None:
        b2 = a2 + found
    else:
        exact = False
        b2 = (dp + n - 1) // 2

    def point(i: int, series: np.ndarray) -> FiducialPoint:
        i = int(min(max(i, 0), n - 1))
        return FiducialPoint(index=i, amplitude=float(series[i]))

    return FiducialSet(
        sp=point(sp, x),
        dn=point(dn, x),
        dp=point(dp, x),
        a1=point(a1, d1),
        b1=point(b1, d1),
        a2=point(a2, d1),
        b2=point(b2, d1),
        confidence=Confidence.exact if exact else Confidence.fallback,
    )


# ─── Reference wave ───────────────────────────────────────────────────────────

def to_template(samples: np.ndarray, length: int = TEMPLATE_LENGTH, strict: bool = True) -> np.ndarray:
    """Resample to `length` points and min-max scale to [0, 1].

    A constant input raises DegenerateBeat, or maps to zeros when not strict.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise InvalidInput("cannot build a template from an empty beat")
    grid = np.linspace(0.0, samples.size - 1, length)
    resampled = np.interp(grid, np.arange(samples.size), samples)
    lo, hi = resampled.min(), resampled.max()
    if hi == lo:
        if strict:
            raise DegenerateBeat("constant beat has no shape")
        return np.zeros(length)
    return (resampled - lo) / (hi - lo)


def build_reference(beats: list[Beat], length: int = TEMPLATE_LENGTH) -> np.ndarray:
    if not beats:
        raise InvalidInput("build_reference needs at least one beat")
    templates = []
    for beat in beats:
        try:
            templates.append(to_template(beat.samples, length))
        except DegenerateBeat:
            logger.warning("beats.reference_skip_constant", user=beat.user_id, start=beat.start_index)
    if not templates:
        raise InvalidInput("every beat is constant; no reference wave")
    reference = np.mean(templates, axis=0)
    logger.info("beats.reference_built", beats=len(templates), length=length)
    return reference


def write_reference(reference: np.ndarray, path: str | Path) -> None:
    Path(path).write_text("\n".join(f"{v:.17g}" for v in reference) + "\n")


def read_reference(path: str | Path) -> np.ndarray:
    p = Path(path)
    try:
        values = np.loadtxt(read_text(p).splitlines(), dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise ParseError(str(exc), path=p) from exc
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise ParseError("reference must hold finite values", path=p)
    return values


# ─── Beats CSV ────────────────────────────────────────────────────────────────

BEAT_COLUMNS = ["trace", "user", "session", "start", "end", "fps", "fta", "reasons", "dtw", "confidence"] + [
    f"fid_{k}" for k in FIDUCIAL_KEYS
]


def write_beats_csv(records: list[BeatRecord], path: str | Path) -> None:
    rows = [
        {
            "trace": r.trace,
            "user": r.user_id,
            "session": r.session_id,
            "start": r.start_index,
            "end": r.end_index,
            "fps": r.fps,
            "fta": int(r.fta),
            "reasons": "|".join(reason.value for reason in r.reasons),
            "dtw": r.dtw_value,
            "confidence": r.confidence.value,
            **{f"fid_{k}": r.fiducials.get(k, -1) for k in FIDUCIAL_KEYS},
        }
        for r in records
    ]
    pd.DataFrame(rows, columns=BEAT_COLUMNS).to_csv(path, index=False, float_format="%.17g")


def read_beats_csv(path: str | Path) -> list[BeatRecord]:
    p = Path(path)
    frame = read_table(p, dtype={"trace": str, "user": str, "session": str, "reasons": str}, keep_default_na=False)
    missing = set(BEAT_COLUMNS) - set(frame.columns)
    if missing:
        raise ParseError(f"missing columns {sorted(missing)}", path=p, line=1)
    records = []
    for offset, row in enumerate(frame.itertuples(index=False)):
        try:
            records.append(
                BeatRecord(
                    trace=row.trace,
                    user_id=row.user,
                    session_id=row.session,
                    start_index=int(row.start),
                    end_index=int(row.end),
                    fps=float(row.fps),
                    fta=bool(int(row.fta)),
                    reasons=[FtaReason(v) for v in str(row.reasons).split("|") if v],
                    dtw_value=float(row.dtw),
                    confidence=Confidence(row.confidence),
                    fiducials={k: int(getattr(row, f"fid_{k}")) for k in FIDUCIAL_KEYS},
                )
            )
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc), path=p, line=offset + 2) from exc
    return records


def slice_beat(trace: Trace, record: BeatRecord) -> Beat:
    if record.end_index > len(trace.samples):
        raise InvalidInput(f"beat {record.start_index}:{record.end_index} exceeds trace {record.trace}")
    return Beat(
        samples=trace.samples[record.start_index:record.end_index],
        start_index=record.start_index,
        end_index=record.end_index,
        fps=trace.fps,
        user_id=record.user_id,
        session_id=record.session_id,
        trace_name=record.trace,
    )
