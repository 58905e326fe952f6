"""
Beat Quality Gate
─────────────────
Flags a beat as failed-to-acquire (FTA) when any rule fires:
  1. max_bpm      beat shorter than the configured heart-rate ceiling allows
  2. peak_count   more distinct maxima than a pulse wave has
  3. dtw_distance shape too far from the average reference wave
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from ppgauth.config import FtaThresholds
from ppgauth.schemas import Beat, FtaReason, QualityVerdict
from ppgauth.signal.beats import to_template
from ppgauth.signal.dtw import dtw_cost, dtw_distance


class BeatQualityGate:
    def count_peaks(self, samples: np.ndarray, window: int = 5, prominence_frac: float = 0.02) -> int:
        """Distinct maxima of the lightly smoothed beat above a prominence floor."""
        span = float(np.ptp(samples)) if samples.size else 0.0
        if span == 0.0:
            return 0
        smoothed = uniform_filter1d(samples, size=min(window, samples.size), mode="nearest")
        peaks, _ = find_peaks(smoothed, prominence=prominence_frac * span)
        return int(peaks.size)

    def reference_distance(self, beat: Beat, reference: np.ndarray, mode: str = "total") -> float:
        template = to_template(beat.samples, len(reference), strict=False)
        if mode == "total":
            return dtw_cost(template, reference)
        return dtw_distance(template, reference)

    def quality_gate(
        self,
        beat: Beat,
        reference: np.ndarray,
        thresholds: FtaThresholds | None = None,
    ) -> QualityVerdict:
        t = thresholds or FtaThresholds()
        reasons: list[FtaReason] = []
        if beat.bpm > t.max_bpm:
            reasons.append(FtaReason.max_bpm)
        if self.count_peaks(beat.samples, t.smoothing_window, t.prominence_frac) > t.max_peaks:
            reasons.append(FtaReason.peak_count)
        distance = self.reference_distance(beat, np.asarray(reference, dtype=np.float64), t.dtw_mode)
        if distance > t.dtw_threshold:
            reasons.append(FtaReason.dtw_distance)
        return QualityVerdict(fta=bool(reasons), reasons=reasons, dtw_value=distance)


beat_quality_gate = BeatQualityGate()
quality_gate = beat_quality_gate.quality_gate
