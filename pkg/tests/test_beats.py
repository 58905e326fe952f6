import numpy as np
import pytest

from ppgauth.errors import InvalidInput, ParseError
from ppgauth.schemas import Beat, BeatRecord, Confidence, FtaReason, Trace, TraceStage
from ppgauth.signal.beats import (
    build_reference,
    detect_fiducials,
    find_boundaries,
    merge_boundaries,
    read_beats_csv,
    read_reference,
    separate_beats,
    slice_beat,
    to_template,
    write_beats_csv,
    write_reference,
)
from ppgauth.synth import Morphology, beat_shape, pulse_train


def _filtered(samples, fps=240.0, **meta):
    return Trace(samples=samples, fps=fps, stage=TraceStage.filtered, meta=meta)


# ─── Segmentation ─────────────────────────────────────────────────────────────

def test_noisy_pulse_train_recall(rng):
    trace, truth = pulse_train(fps=240.0, seconds=30.0, bpm=60.0, snr_db=20.0, rng=rng)
    found = np.array(find_boundaries(trace.samples, trace.fps, max_bpm=240.0))
    hits = sum(np.min(np.abs(found - t)) <= 5 for t in truth)
    assert hits / len(truth) >= 0.95


def test_boundaries_respect_min_gap(rng):
    trace, _ = pulse_train(fps=240.0, seconds=30.0, bpm=70.0, snr_db=10.0, bpm_jitter=0.05, rng=rng)
    found = find_boundaries(trace.samples, trace.fps, max_bpm=240.0)
    assert np.all(np.diff(found) >= 60)


def test_sinusoid_boundaries_at_troughs():
    fps = 240.0
    t = np.arange(int(10 * fps)) / fps
    found = np.array(find_boundaries(np.sin(2 * np.pi * t), fps))
    assert found.size == 10
    assert np.all(np.abs(np.diff(found) - 240) <= 2)
    assert np.all(np.abs((found - 180 + 120) % 240 - 120) <= 2)


def test_constant_signal_has_no_boundaries():
    assert find_boundaries(np.ones(2400), 240.0) == []


def test_too_short_for_two_gaps():
    assert find_boundaries(np.sin(np.arange(100) / 10.0), 240.0, max_bpm=240.0) == []


def test_merge_keeps_deeper_candidate():
    samples = np.zeros(100)
    samples[10], samples[15], samples[60] = -1.0, -2.0, -1.0
    assert merge_boundaries([10, 15, 60], samples, gap=20) == [15, 60]


def test_merge_tie_keeps_earlier():
    samples = np.zeros(100)
    samples[10], samples[15] = -1.0, -1.0
    assert merge_boundaries([10, 15], samples, gap=20) == [10]


def test_separate_beats_cover_consecutive_boundaries(rng):
    trace, _ = pulse_train(fps=240.0, seconds=20.0, bpm=60.0, snr_db=30.0, rng=rng)
    beats = separate_beats(trace)
    assert len(beats) >= 15
    for left, right in zip(beats[:-1], beats[1:]):
        assert left.end_index == right.start_index
    for beat in beats:
        np.testing.assert_array_equal(beat.samples, trace.samples[beat.start_index:beat.end_index])


def test_separate_beats_skips_warmup(rng):
    trace, _ = pulse_train(fps=240.0, seconds=10.0, bpm=60.0, rng=rng)
    trace = trace.model_copy(update={"meta": {"warmup_samples": 240}})
    assert all(b.start_index >= 240 for b in separate_beats(trace, skip_warmup=True))
    assert separate_beats(trace, skip_warmup=False)[0].start_index < 240


def test_separate_beats_needs_filtered_stage():
    with pytest.raises(InvalidInput):
        separate_beats(Trace(samples=np.zeros(1000), fps=240.0, stage=TraceStage.detrended))


# ─── Fiducials ────────────────────────────────────────────────────────────────

def _fine_argext(m: Morphology, lo: float, hi: float, fn) -> float:
    u = np.linspace(lo, hi, 200_001)
    return float(u[fn(beat_shape(u, m))])


def test_fiducials_on_two_gaussian_beat(clean_beat):
    m = Morphology(decay=0.0)
    n = clean_beat.length
    fid = detect_fiducials(clean_beat)
    notch = _fine_argext(m, m.systolic_mu, m.diastolic_mu, np.argmin)
    diastolic = _fine_argext(m, notch, 0.9, np.argmax)
    assert fid.confidence is Confidence.exact
    assert fid.ordered()
    assert abs(fid.sp.index - m.systolic_mu * n) <= 3
    assert abs(fid.dn.index - notch * n) <= 3
    assert abs(fid.dp.index - diastolic * n) <= 3
    assert fid.a1.index < fid.sp.index < fid.b1.index
    assert fid.b1.index < fid.a2.index < fid.b2.index


def test_b1_stays_on_the_systolic_downslope():
    # the diastolic wave is steeper than the systolic one, so the lowest slope
    # after sp lies past dp; b1 takes the first slope minimum instead
    n = 800
    u = np.arange(n) / n
    samples = np.exp(-0.5 * ((u - 0.25) / 0.08) ** 2) + 0.6 * np.exp(-0.5 * ((u - 0.55) / 0.03) ** 2)
    beat = Beat(samples=samples, start_index=0, end_index=n, fps=1000.0)
    fid = detect_fiducials(beat)
    d1 = np.gradient(samples)
    assert fid.confidence is Confidence.exact
    assert abs(fid.b1.index - 264) <= 5
    assert fid.sp.index < fid.b1.index < fid.dn.index
    assert fid.sp.index + int(np.argmin(d1[fid.sp.index:])) > fid.dp.index
    assert fid.b1.index < fid.a2.index < fid.b2.index


def test_fiducials_amplitudes_follow_their_series(clean_beat):
    fid = detect_fiducials(clean_beat)
    d1 = np.gradient(clean_beat.samples)
    assert fid.sp.amplitude == clean_beat.samples[fid.sp.index]
    assert fid.a1.amplitude == d1[fid.a1.index]


def test_single_hump_falls_back_but_stays_ordered():
    n = 400
    u = np.arange(n) / n
    beat = Beat(samples=np.exp(-0.5 * ((u - 0.3) / 0.1) ** 2), start_index=0, end_index=n, fps=500.0)
    fid = detect_fiducials(beat)
    assert fid.confidence is Confidence.fallback
    assert fid.ordered()
    assert all(0 <= getattr(fid, k).index < n for k in ("sp", "dn", "dp", "a1", "b1", "a2", "b2"))


def test_fiducials_need_eight_samples():
    beat = Beat(samples=np.arange(7.0), start_index=0, end_index=7, fps=30.0)
    with pytest.raises(InvalidInput):
        detect_fiducials(beat)


# ─── Reference wave ───────────────────────────────────────────────────────────

def _beat(samples, fps=100.0):
    samples = np.asarray(samples, dtype=float)
    return Beat(samples=samples, start_index=0, end_index=samples.size, fps=fps)


def test_reference_of_one_beat_is_its_template(clean_beat):
    np.testing.assert_array_equal(build_reference([clean_beat]), to_template(clean_beat.samples))


def test_reference_of_mirror_pair_is_pointwise_mean(clean_beat):
    mirrored = _beat(clean_beat.samples[::-1])
    expected = (to_template(clean_beat.samples) + to_template(mirrored.samples)) / 2
    np.testing.assert_allclose(build_reference([clean_beat, mirrored]), expected, atol=1e-12)


def test_reference_skips_constant_beats(clean_beat):
    reference = build_reference([clean_beat, _beat(np.ones(50))])
    np.testing.assert_array_equal(reference, to_template(clean_beat.samples))
    with pytest.raises(InvalidInput):
        build_reference([_beat(np.ones(50))])


def test_template_range_and_length(clean_beat):
    template = to_template(clean_beat.samples, 64)
    assert template.size == 64
    assert template.min() == 0.0 and template.max() == 1.0


def test_reference_file_roundtrip(tmp_path, clean_beat):
    reference = build_reference([clean_beat])
    path = tmp_path / "reference.csv"
    write_reference(reference, path)
    np.testing.assert_array_equal(read_reference(path), reference)


# ─── Beats CSV ────────────────────────────────────────────────────────────────

def test_beats_csv_roundtrip(tmp_path):
    records = [
        BeatRecord(
            trace="u00_s0.csv", user_id="u00", session_id="s0", start_index=10, end_index=70, fps=60.0,
            fta=False, reasons=[], dtw_value=0.123456789012345678,
            fiducials={"sp": 12, "dn": 25, "dp": 31, "a1": 8, "b1": 15, "a2": 28, "b2": 35},
        ),
        BeatRecord(
            trace="u00_s0.csv", user_id="u00", session_id="s0", start_index=70, end_index=90, fps=60.0,
            fta=True, reasons=[FtaReason.max_bpm, FtaReason.dtw_distance], dtw_value=7.5,
            fiducials={"sp": 3, "dn": 9, "dp": 12, "a1": 1, "b1": 5, "a2": 11, "b2": 15},
            confidence=Confidence.fallback,
        ),
    ]
    path = tmp_path / "beats.csv"
    write_beats_csv(records, path)
    assert read_beats_csv(path) == records


def test_slice_beat_rejects_out_of_range():
    trace = _filtered(np.zeros(100))
    record = BeatRecord(
        trace="t", user_id="u", session_id="s", start_index=50, end_index=120, fps=240.0, fta=False, dtw_value=0.0
    )
    with pytest.raises(InvalidInput):
        slice_beat(trace, record)


def test_missing_beats_and_reference_files_are_parse_errors(tmp_path):
    with pytest.raises(ParseError, match="file not found"):
        read_beats_csv(tmp_path / "beats.csv")
    with pytest.raises(ParseError, match="file not found"):
        read_reference(tmp_path / "reference.csv")
