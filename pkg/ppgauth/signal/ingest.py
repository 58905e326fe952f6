"""
Ingest
──────
Frame files → luma traces, and the trace / red-means CSV formats.

Trace CSV
    # fps=<float>,user=<id>,session=<id>[,stage=<stage>]
    one luma value per line, written with 17 significant digits

Raw frame file (.ppgf)
    magic "PPGF", u32 width, u32 height, u32 frame_count, f64 fps (little endian),
    then per frame the R, G and B planes of width*height bytes each
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ppgauth.errors import InvalidInput, ParseError
from ppgauth.schemas import FrameStream, Trace, TraceStage
from ppgauth.utils.codec import read_bytes, read_text

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)

FRAME_MAGIC = b"PPGF"
FRAME_HEADER = np.dtype(
    [("magic", "S4"), ("width", "<u4"), ("height", "<u4"), ("frame_count", "<u4"), ("fps", "<f8")]
)


# ─── Luma ─────────────────────────────────────────────────────────────────────

def extract_luma(stream: FrameStream, user_id: str = "unknown", session_id: str = "unknown") -> Trace:
    """Per-frame mean of 0.299 R + 0.587 G + 0.114 B, in double precision."""
    if stream.frame_count < 1:
        raise InvalidInput("frame stream is empty")
    luma = np.tensordot(LUMA_WEIGHTS, stream.frames.astype(np.float64), axes=([0], [1]))
    samples = luma.mean(axis=(1, 2))
    return Trace(
        samples=samples,
        fps=stream.fps,
        user_id=user_id,
        session_id=session_id,
        stage=TraceStage.raw,
        meta={"width": stream.width, "height": stream.height},
    )


def red_channel_means(stream: FrameStream) -> np.ndarray:
    return stream.frames[:, 0].astype(np.float64).mean(axis=(1, 2))


# ─── Frame files ──────────────────────────────────────────────────────────────

def read_frames_raw(path: str | Path) -> FrameStream:
    p = Path(path)
    raw = read_bytes(p)
    if len(raw) < FRAME_HEADER.itemsize:
        raise ParseError("file shorter than the frame header", path=p)
    header = np.frombuffer(raw, dtype=FRAME_HEADER, count=1)[0]
    if bytes(header["magic"]) != FRAME_MAGIC:
        raise ParseError("bad magic, expected PPGF", path=p)
    width, height, count = int(header["width"]), int(header["height"]), int(header["frame_count"])
    fps = float(header["fps"])
    if width == 0 or height == 0 or count == 0:
        raise ParseError("zero width, height or frame count", path=p)
    if not math.isfinite(fps) or fps <= 0:
        raise ParseError(f"invalid fps {fps}", path=p)
    expected = count * 3 * width * height
    body = raw[FRAME_HEADER.itemsize:]
    if len(body) != expected:
        raise ParseError(f"expected {expected} frame bytes, found {len(body)}", path=p)
    frames = np.frombuffer(body, dtype=np.uint8).reshape(count, 3, height, width)
    return FrameStream(width=width, height=height, fps=fps, frames=frames)


def write_frames_raw(stream: FrameStream, path: str | Path) -> None:
    header = np.array(
        [(FRAME_MAGIC, stream.width, stream.height, stream.frame_count, stream.fps)], dtype=FRAME_HEADER
    )
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(stream.frames, dtype=np.uint8).tobytes())


# ─── Trace CSV ────────────────────────────────────────────────────────────────

def _parse_header(line: str, path: Path) -> dict[str, str]:
    if not line.startswith("#"):
        raise ParseError("missing '# fps=...' header", path=path, line=1)
    fields: dict[str, str] = {}
    for part in line[1:].strip().split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ParseError(f"malformed header field {part!r}", path=path, line=1)
        fields[key.strip()] = value.strip()
    if "fps" not in fields:
        raise ParseError("header has no fps", path=path, line=1)
    return fields


def _parse_column(lines: list[str], path: Path, first_line: int) -> np.ndarray:
    values = np.empty(len(lines), dtype=np.float64)
    for offset, text in enumerate(lines):
        lineno = first_line + offset
        cells = text.strip().split(",")
        if len(cells) != 1:
            raise ParseError(f"expected one value, found {len(cells)}", path=path, line=lineno)
        try:
            value = float(cells[0])
        except ValueError:
            raise ParseError(f"non-numeric cell {cells[0]!r}", path=path, line=lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {cells[0]!r}", path=path, line=lineno)
        values[offset] = value
    return values


def read_trace_csv(path: str | Path) -> Trace:
    p = Path(path)
    lines = read_text(p).splitlines()
    if not lines:
        raise ParseError("empty file", path=p, line=1)
    header = _parse_header(lines[0], p)
    try:
        fps = float(header["fps"])
    except ValueError:
        raise ParseError(f"invalid fps {header['fps']!r}", path=p, line=1) from None
    if not math.isfinite(fps) or fps <= 0:
        raise ParseError(f"invalid fps {fps}", path=p, line=1)
    try:
        stage = TraceStage(header.get("stage", "raw"))
    except ValueError:
        raise ParseError(f"unknown stage {header['stage']!r}", path=p, line=1) from None

    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    samples = _parse_column(body, p, first_line=2)
    if samples.size == 0:
        raise ParseError("trace has no samples", path=p, line=2)
    return Trace(
        samples=samples,
        fps=fps,
        user_id=header.get("user", "unknown"),
        session_id=header.get("session", "unknown"),
        stage=stage,
        meta={"source": p.name},
    )


def _header_value(key: str, value: str) -> str:
    # the header is split on "," and "=" and its values are stripped
    if any(c in value for c in ",=\r\n") or value != value.strip() or not value:
        raise InvalidInput(f"{key} id {value!r} cannot be written to a trace header")
    return value


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    user, session = _header_value("user", trace.user_id), _header_value("session", trace.session_id)
    header = f"# fps={trace.fps!r},user={user},session={session},stage={trace.stage.value}\n"
    body = "\n".join(f"{v:.17g}" for v in trace.samples)
    Path(path).write_text(header + body + "\n")


def read_red_means(path: str | Path, expected_rows: int | None = None) -> np.ndarray:
    p = Path(path)
    lines = read_text(p).splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    values = _parse_column(lines, p, first_line=1)
    if expected_rows is not None and values.size != expected_rows:
        raise ParseError(f"expected {expected_rows} red-mean rows, found {values.size}", path=p)
    return values


def write_red_means(values: np.ndarray, path: str | Path) -> None:
    Path(path).write_text("\n".join(f"{v:.17g}" for v in values) + "\n")
