import numpy as np
import pytest

from ppgauth.errors import InvalidInput, ParseError
from ppgauth.schemas import FrameStream, Trace, TraceStage
from ppgauth.signal.ingest import (
    extract_luma,
    read_frames_raw,
    read_red_means,
    read_trace_csv,
    red_channel_means,
    write_frames_raw,
    write_red_means,
    write_trace_csv,
)


def _stream(rgb, count=3, size=4, fps=30.0):
    frames = np.zeros((count, 3, size, size), dtype=np.uint8)
    for c, value in enumerate(rgb):
        frames[:, c] = value
    return FrameStream(width=size, height=size, fps=fps, frames=frames)


def test_pure_red_luma():
    trace = extract_luma(_stream((255, 0, 0)))
    assert trace.stage is TraceStage.raw
    np.testing.assert_allclose(trace.samples, 76.245, atol=1e-9)


def test_gray_luma_is_the_gray_level():
    np.testing.assert_allclose(extract_luma(_stream((100, 100, 100))).samples, 100.0, atol=1e-9)


def test_one_sample_per_frame_and_fps_kept(rng):
    frames = rng.integers(0, 256, size=(7, 3, 5, 6), dtype=np.uint8)
    stream = FrameStream(width=6, height=5, fps=29.97, frames=frames)
    trace = extract_luma(stream)
    assert trace.samples.shape == (7,)
    assert trace.fps == 29.97
    expected = (0.299 * frames[:, 0] + 0.587 * frames[:, 1] + 0.114 * frames[:, 2]).mean(axis=(1, 2))
    np.testing.assert_allclose(trace.samples, expected, rtol=1e-12)


def test_luma_ignores_pixel_order(rng):
    frames = rng.integers(0, 256, size=(5, 3, 6, 7), dtype=np.uint8)
    order = rng.permutation(6 * 7)
    shuffled = frames.reshape(5, 3, -1)[:, :, order].reshape(5, 3, 6, 7)
    a = extract_luma(FrameStream(width=7, height=6, fps=30.0, frames=frames))
    b = extract_luma(FrameStream(width=7, height=6, fps=30.0, frames=shuffled))
    np.testing.assert_allclose(b.samples, a.samples, rtol=1e-12)


@pytest.mark.parametrize("scale", [2, 3, 5])
def test_luma_scales_with_every_channel(rng, scale):
    frames = rng.integers(0, 51, size=(6, 3, 4, 4), dtype=np.uint8)
    base = extract_luma(FrameStream(width=4, height=4, fps=30.0, frames=frames))
    scaled = extract_luma(FrameStream(width=4, height=4, fps=30.0, frames=frames * np.uint8(scale)))
    np.testing.assert_allclose(scaled.samples, scale * base.samples, rtol=1e-12)


def test_luma_of_random_frames_matches_pixel_sum(rng):
    frames = rng.integers(0, 256, size=(100, 3, 4, 5), dtype=np.uint8)
    trace = extract_luma(FrameStream(width=5, height=4, fps=30.0, frames=frames))
    for k in range(100):
        total = 0.0
        for y in range(4):
            for x in range(5):
                r, g, b = (float(frames[k, c, y, x]) for c in range(3))
                total += 0.299 * r + 0.587 * g + 0.114 * b
        assert trace.samples[k] == pytest.approx(total / 20, rel=1e-12)


def test_red_channel_means():
    np.testing.assert_allclose(red_channel_means(_stream((200, 10, 10))), 200.0)


def test_frame_file_roundtrip(tmp_path, rng):
    frames = rng.integers(0, 256, size=(4, 3, 2, 3), dtype=np.uint8)
    stream = FrameStream(width=3, height=2, fps=60.0, frames=frames)
    path = tmp_path / "clip.ppgf"
    write_frames_raw(stream, path)
    back = read_frames_raw(path)
    assert (back.width, back.height, back.fps) == (3, 2, 60.0)
    np.testing.assert_array_equal(back.frames, frames)


def test_truncated_frame_file(tmp_path):
    path = tmp_path / "clip.ppgf"
    write_frames_raw(_stream((1, 2, 3)), path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(ParseError):
        read_frames_raw(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "clip.ppgf"
    write_frames_raw(_stream((1, 2, 3)), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ParseError, match="magic"):
        read_frames_raw(path)


def test_trace_csv_duration(tmp_path):
    path = tmp_path / "u01_s1.csv"
    path.write_text("# fps=240,user=u01,session=s1\n" + "\n".join(["1.5"] * 7200) + "\n")
    trace = read_trace_csv(path)
    assert trace.duration == pytest.approx(30.0)
    assert (trace.user_id, trace.session_id) == ("u01", "s1")
    assert trace.meta["source"] == "u01_s1.csv"


def test_trace_csv_alphabetic_cell_reports_line(tmp_path):
    lines = ["# fps=30"] + ["1.0"] * 10 + ["abc"] + ["2.0"] * 3
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        read_trace_csv(path)
    assert err.value.line == 12


@pytest.mark.parametrize("cell", ["nan", "inf", "1,2"])
def test_trace_csv_rejects_non_finite_and_multi_column(tmp_path, cell):
    path = tmp_path / "bad.csv"
    path.write_text(f"# fps=30\n1.0\n{cell}\n")
    with pytest.raises(ParseError) as err:
        read_trace_csv(path)
    assert err.value.line == 3


def test_trace_csv_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0\n2.0\n")
    with pytest.raises(ParseError) as err:
        read_trace_csv(path)
    assert err.value.line == 1


def test_trace_csv_roundtrip_is_exact(tmp_path, rng):
    trace = Trace(samples=rng.normal(size=50) * 1e3, fps=59.94, user_id="u3", session_id="s2", stage=TraceStage.filtered)
    path = tmp_path / "t.csv"
    write_trace_csv(trace, path)
    back = read_trace_csv(path)
    np.testing.assert_array_equal(back.samples, trace.samples)
    assert back.fps == trace.fps
    assert back.stage is TraceStage.filtered


def test_red_means_row_count(tmp_path):
    path = tmp_path / "r.csv"
    write_red_means(np.array([100.0, 101.0, 99.5]), path)
    np.testing.assert_array_equal(read_red_means(path, expected_rows=3), [100.0, 101.0, 99.5])
    with pytest.raises(ParseError):
        read_red_means(path, expected_rows=4)


def test_missing_trace_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError, match="file not found") as err:
        read_trace_csv(tmp_path / "absent.csv")
    assert err.value.path.endswith("absent.csv")


def test_missing_frame_file_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError, match="file not found"):
        read_frames_raw(tmp_path / "absent.ppgf")


def test_binary_trace_file_is_a_parse_error(tmp_path):
    path = tmp_path / "t.csv"
    path.write_bytes(b"# fps=30\n\xff\xfe\n")
    with pytest.raises(ParseError, match="UTF-8"):
        read_trace_csv(path)


@pytest.mark.parametrize("user", ["a,b", "a=b", "a\nb", " a", ""])
def test_trace_ids_that_break_the_header_are_refused(tmp_path, user):
    trace = Trace(samples=np.ones(3), fps=30.0, user_id=user, session_id="s0")
    with pytest.raises(InvalidInput, match="trace header"):
        write_trace_csv(trace, tmp_path / "t.csv")
    assert not (tmp_path / "t.csv").exists()
