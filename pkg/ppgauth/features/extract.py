"""
Per-beat features
─────────────────
541 values per beat, always in this order:

  statistical   4   max, min, range, length (s) of the filtered beat
  widths       18   width of the superlevel set at heights 0.05 … 0.95
  fft         500   |DFT| bins 0..499 of the normalized beat padded to 1000
  fiducial     19   normalized times, amplitudes, slopes and areas

Everything except the statistical group is computed on the normalized beat
(1000 Hz, amplitude in [0, 1]) and is therefore invariant to positive affine
amplitude changes; fiducial times are fractions of the beat duration.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import trapezoid

from ppgauth.config import FeatureConfig
from ppgauth.errors import DegenerateBeat
from ppgauth.schemas import Beat, FeatureVector, FiducialSet, NormalizedBeat
from ppgauth.utils.logger import get_logger

logger = get_logger(__name__)

WIDTH_HEIGHTS = np.linspace(0.05, 0.95, 18)
RATIO_SENTINEL = 1e6

STAT_NAMES = ("max", "min", "range", "length")
WIDTH_NAMES = tuple(f"width_{k:02d}" for k in range(len(WIDTH_HEIGHTS)))
FIDUCIAL_NAMES = (
    "t_sp", "t_dn", "t_dp", "t_a1", "t_b1", "t_a2", "t_b2",
    "amp_sp", "amp_dn", "amp_dp",
    "a1", "b1", "a2", "b2",
    "A1", "A2", "A2_A1", "b_a2", "dt_sd",
)


def fft_names(dft_length: int = 1000) -> tuple[str, ...]:
    return tuple(f"fft_{k:03d}" for k in range(dft_length // 2))


def feature_names(dft_length: int = 1000) -> tuple[str, ...]:
    return STAT_NAMES + WIDTH_NAMES + fft_names(dft_length) + FIDUCIAL_NAMES


FEATURE_NAMES = feature_names()
GROUPS = {
    "statistical": STAT_NAMES,
    "width": WIDTH_NAMES,
    "fft": fft_names(),
    "fiducial": FIDUCIAL_NAMES,
}


def normalize_beat(beat: Beat, resample_hz: float = 1000.0) -> NormalizedBeat:
    raw_min, raw_max = float(beat.samples.min()), float(beat.samples.max())
    if raw_max == raw_min:
        raise DegenerateBeat(f"constant beat at {beat.user_id}/{beat.session_id}:{beat.start_index}")
    count = max(2, int(round(beat.duration * resample_hz)))
    grid = np.linspace(0.0, beat.length - 1, count)
    resampled = np.interp(grid, np.arange(beat.length), beat.samples)
    lo, hi = resampled.min(), resampled.max()
    return NormalizedBeat(
        samples=(resampled - lo) / (hi - lo),
        original_duration_s=beat.duration,
        original_min=raw_min,
        original_max=raw_max,
    )


def statistical_features(beat: Beat) -> np.ndarray:
    hi, lo = float(beat.samples.max()), float(beat.samples.min())
    return np.array([hi, lo, hi - lo, beat.duration])


def width_features(nb: NormalizedBeat, resample_hz: float = 1000.0) -> np.ndarray:
    widths = np.zeros(len(WIDTH_HEIGHTS))
    for k, h in enumerate(WIDTH_HEIGHTS):
        above = np.flatnonzero(nb.samples >= h)
        if above.size:
            widths[k] = (above[-1] - above[0]) / resample_hz
    return widths


def frequency_features(nb: NormalizedBeat, dft_length: int = 1000) -> np.ndarray:
    padded = np.zeros(dft_length)
    keep = min(dft_length, nb.samples.size)
    padded[:keep] = nb.samples[:keep]
    return np.abs(np.fft.rfft(padded))[: dft_length // 2]


def fiducial_features(
    beat: Beat,
    fid: FiducialSet,
    nb: NormalizedBeat | None = None,
    ratio_numerator: str = "b1",
) -> np.ndarray:
    nb = nb or normalize_beat(beat)
    y = nb.samples
    n, m = beat.length, y.size
    # normalized time spanned by the resampled grid is [0, (n-1)/n]
    du = ((n - 1) / n) / (m - 1)
    slope = np.gradient(y, du)

    def frac(i: int) -> float:
        return i / n

    def pos(i: int) -> int:
        return int(round(i * (m - 1) / (n - 1))) if n > 1 else 0

    t = {k: frac(getattr(fid, k).index) for k in ("sp", "dn", "dp", "a1", "b1", "a2", "b2")}
    d = {k: float(slope[pos(getattr(fid, k).index)]) for k in ("a1", "b1", "a2", "b2")}
    dn = pos(fid.dn.index)
    area_1 = float(trapezoid(y[: dn + 1], dx=du))
    area_2 = float(trapezoid(y[dn:], dx=du))

    if area_1 == 0.0:
        logger.warning("features.zero_systolic_area", user=beat.user_id, start=beat.start_index, recommend="fta")
        area_ratio = RATIO_SENTINEL
    else:
        area_ratio = area_2 / area_1
    numerator = d["b1"] if ratio_numerator == "b1" else d["b2"]
    if d["a2"] == 0.0:
        logger.warning("features.zero_a2_slope", user=beat.user_id, start=beat.start_index, recommend="fta")
        slope_ratio = RATIO_SENTINEL
    else:
        slope_ratio = numerator / d["a2"]

    return np.array([
        t["sp"], t["dn"], t["dp"], t["a1"], t["b1"], t["a2"], t["b2"],
        y[pos(fid.sp.index)], y[dn], y[pos(fid.dp.index)],
        d["a1"], d["b1"], d["a2"], d["b2"],
        area_1, area_2, area_ratio, slope_ratio,
        t["dp"] - t["sp"],
    ])


def extract_all(
    beat: Beat,
    fid: FiducialSet,
    cfg: FeatureConfig | None = None,
    fta: bool = False,
) -> FeatureVector:
    cfg = cfg or FeatureConfig()
    nb = normalize_beat(beat, cfg.resample_hz)
    values = np.concatenate([
        statistical_features(beat),
        width_features(nb, cfg.resample_hz),
        frequency_features(nb, cfg.dft_length),
        fiducial_features(beat, fid, nb, cfg.ratio_numerator),
    ])
    return FeatureVector(
        values=values,
        names=feature_names(cfg.dft_length),
        user_id=beat.user_id,
        session_id=beat.session_id,
        fta=fta,
    )
