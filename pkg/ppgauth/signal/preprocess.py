"""
Preprocessing
─────────────
raw luma → detrended (rolling-mean subtraction) → filtered (causal Butterworth).

Both stages are linear and preserve length. The low-pass runs forward only so
the pipeline could process frames as they arrive; its zero initial state makes
the first second unreliable, which is recorded as `warmup_samples`.
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from scipy import signal as sps

from ppgauth.config import DetrendConfig, FilterSpec
from ppgauth.errors import InvalidInput
from ppgauth.schemas import Trace, TraceStage
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)


def rolling_mean(samples: np.ndarray, width: int, alignment: str = "centered") -> np.ndarray:
    """Rolling mean whose window shrinks to the available samples at the edges.

    Centered windows span `width // 2` samples on each side, i.e. an odd
    count, so a linear trend cancels exactly in the interior.
    """
    series = pd.Series(samples)
    if alignment == "centered":
        window = 2 * (width // 2) + 1
        return series.rolling(window, center=True, min_periods=1).mean().to_numpy()
    return series.rolling(width, min_periods=1).mean().to_numpy()


def detrend(trace: Trace, window_seconds: float = 1.0, alignment: str = "centered") -> Trace:
    if trace.stage is not TraceStage.raw:
        raise InvalidInput(f"detrend expects a raw trace, got {trace.stage.value}")
    width = int(round(window_seconds * trace.fps))
    if width < 2:
        raise InvalidInput(f"detrend window of {width} samples is too short")
    if width > len(trace.samples):
        raise InvalidInput(f"detrend window ({width}) is longer than the trace ({len(trace.samples)})")
    trend = rolling_mean(trace.samples, width, alignment)
    return trace.advance(
        trace.samples - trend,
        TraceStage.detrended,
        detrend_window=width,
        detrend_alignment=alignment,
    )


def design_lowpass(spec: FilterSpec, fps: float) -> np.ndarray:
    """Second-order sections of a Butterworth low-pass (bilinear, pre-warped)."""
    nyquist = fps / 2.0
    if not 0 < spec.cutoff_hz < nyquist:
        raise InvalidInput(f"cutoff {spec.cutoff_hz} Hz must lie in (0, {nyquist}) Hz")
    sos = sps.butter(spec.order, spec.cutoff_hz, btype="low", fs=fps, output="sos")
    _, poles, _ = sps.sos2zpk(sos)
    if np.any(np.abs(poles) >= 1.0):
        raise InvalidInput("unstable low-pass design: pole on or outside the unit circle")
    return sos


def lowpass(trace: Trace, spec: FilterSpec | None = None) -> Trace:
    spec = spec or FilterSpec()
    if trace.stage is not TraceStage.detrended:
        raise InvalidInput(f"lowpass expects a detrended trace, got {trace.stage.value}")
    sos = design_lowpass(spec, trace.fps)
    filtered = sps.sosfilt(sos, trace.samples)
    return trace.advance(
        filtered,
        TraceStage.filtered,
        cutoff_hz=spec.cutoff_hz,
        filter_order=spec.order,
        warmup_samples=int(round(trace.fps)),
    )


def preprocess(trace: Trace, detrend_cfg: DetrendConfig | None = None, spec: FilterSpec | None = None) -> Trace:
    detrend_cfg = detrend_cfg or DetrendConfig()
    out = lowpass(detrend(trace, detrend_cfg.window_seconds, detrend_cfg.alignment), spec)
    logger.debug("preprocess.done", user=trace.user_id, session=trace.session_id, samples=len(out.samples))
    return out
