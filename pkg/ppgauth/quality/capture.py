"""
Capture Validation
──────────────────
Rejects recordings before they enter the pipeline:
  1. red light too weak (finger not covering the lens / flash off)
  2. sudden luma jumps (finger lifted or moved)
  3. recordings too short to hold enough beats
Problems are reported as reasons, never raised.
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from ppgauth.config import ValidationConfig
from ppgauth.schemas import CaptureIssue, Trace, TraceStage, ValidationVerdict
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)


class CaptureValidator:
    """Trace-level checks on raw luma and, when available, red-channel means."""

    def red_channel_low(self, red_means: np.ndarray, fps: float, floor: float) -> bool:
        window = max(1, int(round(fps)))
        if len(red_means) <= window:
            return float(np.mean(red_means)) < floor
        windowed = pd.Series(red_means).rolling(window).mean().to_numpy()[window - 1:]
        return bool(np.min(windowed) < floor)

    def luma_jump(self, samples: np.ndarray, jump_frac: float) -> bool:
        if samples.size < 2:
            return False
        span = float(samples.max() - samples.min())
        if span == 0.0:
            return False
        return bool(np.max(np.abs(np.diff(samples))) > jump_frac * span)

    def validate_trace(
        self,
        trace: Trace,
        red_means: np.ndarray | None = None,
        cfg: ValidationConfig | None = None,
    ) -> ValidationVerdict:
        cfg = cfg or ValidationConfig()
        if trace.stage is not TraceStage.raw:
            logger.warning("capture.non_raw_trace", stage=trace.stage.value)

        reasons: list[CaptureIssue] = []
        if red_means is not None and len(red_means) and self.red_channel_low(
            np.asarray(red_means, dtype=np.float64), trace.fps, cfg.red_floor
        ):
            reasons.append(CaptureIssue.red_channel_low)
        if self.luma_jump(trace.samples, cfg.jump_frac):
            reasons.append(CaptureIssue.luma_jump)
        if trace.duration < cfg.min_seconds:
            reasons.append(CaptureIssue.too_short)

        if reasons:
            logger.warning(
                "capture.rejected",
                user=trace.user_id,
                session=trace.session_id,
                reasons=[r.value for r in reasons],
            )
        return ValidationVerdict.from_reasons(reasons)


capture_validator = CaptureValidator()
validate_trace = capture_validator.validate_trace
