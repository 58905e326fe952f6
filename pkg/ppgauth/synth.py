"""
Synthetic fixtures
──────────────────
Parameterized PPG beats (systolic wave, dicrotic notch, diastolic wave and a
steep end-of-beat drop), pulse trains with known beat boundaries, whole
multi-user datasets with per-session drift, and Gaussian feature users for
exercising the evaluation protocols without the signal stages.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from ppgauth.schemas import Beat, FeatureMatrix, FrameStream, Trace, TraceStage
from ppgauth.signal.ingest import write_frames_raw, write_trace_csv
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)


class Morphology(BaseModel):
    """Beat shape over the phase u ∈ [0, 1)."""

    model_config = ConfigDict(frozen=True)

    systolic_mu: float = 0.22
    systolic_sigma: float = 0.07
    diastolic_amp: float = 0.45
    diastolic_mu: float = 0.55
    diastolic_sigma: float = 0.10
    decay: float = 1.0
    decay_power: float = 8.0

    def drifted(self, rng: np.random.Generator, scale: float) -> Morphology:
        if scale == 0:
            return self
        jitter = rng.normal(0.0, scale, size=5)
        return self.model_copy(
            update={
                "systolic_mu": float(np.clip(self.systolic_mu + 0.03 * jitter[0], 0.1, 0.35)),
                "systolic_sigma": float(np.clip(self.systolic_sigma * (1 + 0.1 * jitter[1]), 0.03, 0.12)),
                "diastolic_amp": float(np.clip(self.diastolic_amp + 0.1 * jitter[2], 0.1, 0.8)),
                "diastolic_mu": float(np.clip(self.diastolic_mu + 0.03 * jitter[3], 0.4, 0.7)),
                "diastolic_sigma": float(np.clip(self.diastolic_sigma * (1 + 0.1 * jitter[4]), 0.05, 0.15)),
            }
        )


def beat_shape(u: np.ndarray, m: Morphology) -> np.ndarray:
    return (
        np.exp(-0.5 * ((u - m.systolic_mu) / m.systolic_sigma) ** 2)
        + m.diastolic_amp * np.exp(-0.5 * ((u - m.diastolic_mu) / m.diastolic_sigma) ** 2)
        - m.decay * u**m.decay_power
    )


def two_gaussian_beat(
    fps: float = 1000.0,
    duration_s: float = 0.8,
    morphology: Morphology | None = None,
    user_id: str = "synthetic",
) -> Beat:
    """A single filtered-stage beat; with decay 0 the systolic peak sits at systolic_mu."""
    m = morphology or Morphology(decay=0.0)
    n = int(round(duration_s * fps))
    samples = beat_shape(np.arange(n) / n, m)
    return Beat(samples=samples, start_index=0, end_index=n, fps=fps, user_id=user_id)


def pulse_train(
    fps: float = 240.0,
    seconds: float = 30.0,
    bpm: float = 60.0,
    morphology: Morphology | None = None,
    snr_db: float | None = None,
    bpm_jitter: float = 0.0,
    rng: np.random.Generator | None = None,
    user_id: str = "synthetic",
    session_id: str = "s0",
) -> tuple[Trace, list[int]]:
    """Filtered-stage trace and the true beat start indices (excluding 0)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    m = morphology or Morphology()
    total = int(round(seconds * fps))
    pieces, starts, pos = [], [], 0
    while pos < total:
        rate = bpm * (1.0 + bpm_jitter * rng.normal()) if bpm_jitter else bpm
        length = max(8, int(round(60.0 * fps / rate)))
        pieces.append(beat_shape(np.arange(length) / length, m))
        starts.append(pos)
        pos += length
    clean = np.concatenate(pieces)[:total]
    if snr_db is not None:
        clean = clean + rng.normal(0.0, clean.std() * 10 ** (-snr_db / 20.0), size=clean.size)
    trace = Trace(samples=clean, fps=fps, user_id=user_id, session_id=session_id, stage=TraceStage.filtered)
    return trace, [s for s in starts[1:] if s < total]


def raw_trace(
    morphology: Morphology,
    bpm: float,
    rng: np.random.Generator,
    fps: float = 60.0,
    seconds: float = 40.0,
    user_id: str = "u00",
    session_id: str = "s0",
    amplitude: float = 3.0,
    level: float = 120.0,
    noise: float = 0.02,
) -> Trace:
    """Luma-like raw trace: pulse train scaled onto a bright, slowly wandering baseline."""
    pulses, _ = pulse_train(fps, seconds, bpm, morphology, None, 0.03, rng, user_id, session_id)
    t = np.arange(pulses.samples.size) / fps
    wander = 1.5 * np.sin(2 * np.pi * 0.08 * t + rng.uniform(0, 2 * np.pi))
    samples = level + wander + amplitude * pulses.samples + rng.normal(0.0, noise * amplitude, size=t.size)
    return Trace(samples=samples, fps=fps, user_id=user_id, session_id=session_id, stage=TraceStage.raw)


def trace_to_frames(trace: Trace, rng: np.random.Generator, width: int = 8, height: int = 8) -> FrameStream:
    """Gray frames whose mean luma follows the trace; per-pixel dither keeps sub-level detail."""
    dither = rng.uniform(0.0, 1.0, size=(trace.samples.size, height, width))
    gray = np.clip(np.floor(trace.samples[:, None, None] + dither), 0, 255).astype(np.uint8)
    frames = np.repeat(gray[:, None, :, :], 3, axis=1)
    return FrameStream(width=width, height=height, fps=trace.fps, frames=frames)


def user_morphologies(n_users: int, rng: np.random.Generator) -> list[tuple[Morphology, float]]:
    """Distinct (shape, heart rate) per user."""
    return [
        (
            Morphology(
                systolic_mu=float(rng.uniform(0.16, 0.28)),
                systolic_sigma=float(rng.uniform(0.05, 0.09)),
                diastolic_amp=float(rng.uniform(0.25, 0.65)),
                diastolic_mu=float(rng.uniform(0.48, 0.62)),
                diastolic_sigma=float(rng.uniform(0.08, 0.12)),
            ),
            float(rng.uniform(60.0, 85.0)),
        )
        for _ in range(n_users)
    ]


def synth_dataset(
    out_dir: str | Path,
    n_users: int = 15,
    sessions: int = 2,
    seconds: float = 40.0,
    fps: float = 60.0,
    drift: float = 0.0,
    seed: int = 0,
    frames: bool = False,
) -> list[Path]:
    """Write one raw trace CSV (or .ppgf frame file) per user and session."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.default_rng(seed)
    written = []
    for ui, (morph, bpm) in enumerate(user_morphologies(n_users, root)):
        for si in range(sessions):
            rng = np.random.default_rng(np.random.SeedSequence([seed, ui, si]))
            user, session = f"u{ui:02d}", f"s{si}"
            trace = raw_trace(morph.drifted(rng, drift), bpm, rng, fps, seconds, user, session)
            if frames:
                path = out / f"{user}_{session}.ppgf"
                write_frames_raw(trace_to_frames(trace, rng), path)
            else:
                path = out / f"{user}_{session}.csv"
                write_trace_csv(trace, path)
            written.append(path)
    logger.info("synth.dataset_written", users=n_users, sessions=sessions, files=len(written), out=str(out))
    return written


def gaussian_feature_users(
    n_users: int = 15,
    per_user: int = 120,
    dims: int = 6,
    separation: float = 3.0,
    sessions: int = 1,
    drift: float = 0.0,
    seed: int = 0,
) -> FeatureMatrix:
    """Users with Gaussian features around distinct means; each session shifts a user's mean by drift·N(0, 1)."""
    rng = np.random.default_rng(seed)
    means = rng.normal(0.0, separation, size=(n_users, dims))
    rows, users, sess = [], [], []
    for u in range(n_users):
        for s in range(sessions):
            count = per_user // sessions + (1 if s < per_user % sessions else 0)
            centre = means[u] + drift * rng.normal(size=dims)
            rows.append(centre + rng.normal(size=(count, dims)))
            users += [f"u{u:02d}"] * count
            sess += [f"s{s}"] * count
    return FeatureMatrix(
        values=np.vstack(rows),
        names=tuple(f"f{j:02d}" for j in range(dims)),
        user_ids=np.array(users, dtype=object),
        session_ids=np.array(sess, dtype=object),
        fta=np.zeros(len(users), dtype=bool),
    )
