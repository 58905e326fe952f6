from pathlib import Path

import numpy as np
import pytest

from ppgauth.errors import DegenerateBeat, ParseError
from ppgauth.features import FEATURE_NAMES, GROUPS, extract_all, normalize_beat
from ppgauth.features.extract import (
    WIDTH_HEIGHTS,
    fiducial_features,
    frequency_features,
    statistical_features,
    width_features,
)
from ppgauth.features.matrix import read_features_csv, write_features_csv
from ppgauth.schemas import Beat, FeatureMatrix, NormalizedBeat
from ppgauth.signal.beats import detect_fiducials
from ppgauth.synth import Morphology, beat_shape

DATA_DIR = Path(__file__).parent / "data"


def _beat(samples, fps=1000.0, user="u00"):
    samples = np.asarray(samples, dtype=float)
    return Beat(samples=samples, start_index=0, end_index=samples.size, fps=fps, user_id=user, session_id="s0")


def _normalized(samples):
    return NormalizedBeat(samples=np.asarray(samples, dtype=float), original_duration_s=1.0, original_min=0.0, original_max=1.0)


# ─── Normalization ────────────────────────────────────────────────────────────

def test_resampled_to_thousand_hertz():
    u = np.arange(192) / 192
    nb = normalize_beat(_beat(np.sin(np.pi * u) + u, fps=240.0))
    assert nb.samples.size == 800
    assert nb.samples.min() == 0.0 and nb.samples.max() == 1.0
    assert nb.original_duration_s == pytest.approx(0.8)


def test_already_normalized_beat_is_unchanged():
    x = np.sin(np.linspace(0, np.pi, 700))
    x = (x - x.min()) / (x.max() - x.min())
    np.testing.assert_allclose(normalize_beat(_beat(x)).samples, x, atol=1e-9)


def test_positive_affine_invariance(rng):
    x = rng.normal(size=300)
    a = normalize_beat(_beat(x, fps=360.0)).samples
    b = normalize_beat(_beat(3.0 * x + 7.0, fps=360.0)).samples
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_constant_beat_is_degenerate():
    with pytest.raises(DegenerateBeat):
        normalize_beat(_beat(np.full(100, 4.2)))


# ─── Groups ───────────────────────────────────────────────────────────────────

def test_statistical_group():
    np.testing.assert_allclose(statistical_features(_beat([1.0, 3.0, 2.0], fps=3.0)), [3.0, 1.0, 2.0, 1.0])


def test_triangle_widths():
    x = 1.0 - np.abs(np.linspace(-1.0, 1.0, 1000))
    widths = width_features(normalize_beat(_beat(x)))
    np.testing.assert_allclose(widths, 1.0 - WIDTH_HEIGHTS, atol=3e-3)


def test_widths_shrink_with_height(clean_beat):
    widths = width_features(normalize_beat(clean_beat))
    assert np.all(np.diff(widths) <= 0)


def test_dc_beat_spectrum():
    mags = frequency_features(_normalized(np.ones(1000)))
    assert mags.size == 500
    assert mags[0] == pytest.approx(1000.0)
    np.testing.assert_allclose(mags[1:], 0.0, atol=1e-9)


def test_cosine_lands_in_its_bin():
    k = np.arange(1000)
    mags = frequency_features(_normalized(np.cos(2 * np.pi * 5 * k / 1000)))
    assert mags[5] == pytest.approx(500.0)
    assert np.argmax(mags) == 5


def test_spectrum_matches_direct_dft(rng):
    k = np.arange(1000)
    basis = np.exp(-2j * np.pi * np.outer(np.arange(500), k) / 1000)
    for _ in range(20):
        length = int(rng.integers(300, 1300))
        x = rng.uniform(size=length)
        padded = np.zeros(1000)
        padded[: min(1000, length)] = x[:1000]
        expected = np.abs(basis @ padded)
        got = frequency_features(_normalized(x))
        np.testing.assert_allclose(got, expected, atol=1e-6 * expected.max())


def test_symmetric_beat_has_equal_areas():
    u = np.arange(401) / 800
    half = np.exp(-0.5 * ((u - 0.25) / 0.08) ** 2) + np.exp(-0.5 * ((u - 0.75) / 0.08) ** 2)
    beat = _beat(np.concatenate([half, half[-2::-1]]))
    fid = detect_fiducials(beat)
    assert fid.dn.index == 400
    values = dict(zip(GROUPS["fiducial"], fiducial_features(beat, fid)))
    assert values["A2_A1"] == pytest.approx(1.0, abs=1e-6)
    assert values["A1"] == pytest.approx(values["A2"], rel=1e-6)


def test_fiducial_times_match_closed_form(clean_beat):
    m = Morphology(decay=0.0)
    u = np.linspace(0.0, 1.0, 200_001)
    shape = beat_shape(u, m)
    notch = u[np.argmin(np.where((u > m.systolic_mu) & (u < m.diastolic_mu), shape, np.inf))]
    dp = u[np.argmax(np.where(u > notch, shape, -np.inf))]
    values = dict(zip(GROUPS["fiducial"], fiducial_features(clean_beat, detect_fiducials(clean_beat))))
    assert values["t_sp"] == pytest.approx(m.systolic_mu, rel=0.02)
    assert values["t_dp"] == pytest.approx(dp, rel=0.02)
    assert values["dt_sd"] == pytest.approx(dp - m.systolic_mu, rel=0.02)
    assert values["amp_sp"] == 1.0
    assert 0.0 <= values["amp_dn"] < values["amp_dp"] < 1.0


def test_fiducial_times_are_fractions(clean_beat):
    values = dict(zip(GROUPS["fiducial"], fiducial_features(clean_beat, detect_fiducials(clean_beat))))
    for name in ("t_sp", "t_dn", "t_dp", "t_a1", "t_b1", "t_a2", "t_b2"):
        assert 0.0 <= values[name] < 1.0
    assert values["t_a1"] <= values["t_sp"] <= values["t_dn"] <= values["t_dp"]


@pytest.mark.parametrize("stretch", [0.75, 1.5])
def test_fiducial_times_ignore_heart_rate(stretch):
    m = Morphology(decay=0.0)
    base_n, n = 800, int(800 * stretch)
    base = _beat(beat_shape(np.arange(base_n) / base_n, m))
    slow = _beat(beat_shape(np.arange(n) / n, m))
    a = dict(zip(GROUPS["fiducial"], fiducial_features(base, detect_fiducials(base))))
    b = dict(zip(GROUPS["fiducial"], fiducial_features(slow, detect_fiducials(slow))))
    assert slow.duration == pytest.approx(stretch * base.duration)
    for name in ("t_sp", "t_dn", "t_dp", "t_a1", "t_b1", "t_a2", "t_b2", "dt_sd"):
        assert b[name] == pytest.approx(a[name], abs=0.005), name
    assert b["A2_A1"] == pytest.approx(a["A2_A1"], rel=0.02)


# ─── Full vector ──────────────────────────────────────────────────────────────

def test_feature_names_match_golden_list():
    golden = (DATA_DIR / "feature_names.txt").read_text().split()
    assert list(FEATURE_NAMES) == golden
    assert len(FEATURE_NAMES) == 541
    assert {k: len(v) for k, v in GROUPS.items()} == {"statistical": 4, "width": 18, "fft": 500, "fiducial": 19}


def test_extract_all_is_the_group_concatenation(clean_beat):
    fid = detect_fiducials(clean_beat)
    vector = extract_all(clean_beat, fid)
    nb = normalize_beat(clean_beat)
    expected = np.concatenate([
        statistical_features(clean_beat),
        width_features(nb),
        frequency_features(nb),
        fiducial_features(clean_beat, fid, nb),
    ])
    assert vector.names == FEATURE_NAMES
    assert np.all(np.isfinite(vector.values))
    np.testing.assert_array_equal(vector.values, expected)


def test_identical_beats_identical_vectors():
    x = beat_shape(np.arange(200) / 200, Morphology())
    first, second = _beat(x, fps=240.0), _beat(x.copy(), fps=240.0, user="u01")
    a = extract_all(first, detect_fiducials(first))
    b = extract_all(second, detect_fiducials(second))
    np.testing.assert_array_equal(a.values, b.values)


def test_amplitude_scaling_only_moves_statistical_group():
    x = beat_shape(np.arange(200) / 200, Morphology())
    small, large = _beat(x, fps=240.0), _beat(5.0 * x + 2.0, fps=240.0)
    a = extract_all(small, detect_fiducials(small)).values
    b = extract_all(large, detect_fiducials(large)).values
    np.testing.assert_allclose(a[4:], b[4:], rtol=1e-9, atol=1e-9)
    assert b[2] == pytest.approx(5.0 * a[2])


# ─── Feature CSV ──────────────────────────────────────────────────────────────

def test_features_csv_roundtrip(tmp_path, beat_features):
    path = tmp_path / "features.csv"
    write_features_csv(beat_features, path)
    back = read_features_csv(path)
    assert back.names == beat_features.names
    np.testing.assert_array_equal(back.values, beat_features.values)
    assert list(back.user_ids) == list(beat_features.user_ids)
    np.testing.assert_array_equal(back.fta, beat_features.fta)


def test_features_csv_non_numeric_cell(tmp_path):
    matrix = FeatureMatrix(
        values=np.ones((3, 2)), names=("a", "b"),
        user_ids=np.array(["u0"] * 3, dtype=object), session_ids=np.array(["s0"] * 3, dtype=object),
        fta=np.zeros(3, dtype=bool),
    )
    path = tmp_path / "features.csv"
    write_features_csv(matrix, path)
    lines = path.read_text().splitlines()
    lines[2] = "oops," + lines[2].split(",", 1)[1]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError):
        read_features_csv(path)
