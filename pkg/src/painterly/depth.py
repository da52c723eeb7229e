"""Depth-frame sources: PDR1 recordings, ASCII PGM fixtures, and a synthetic performer.

All three sources produce the same ``DepthFrame`` value: a rectangular grid of
millimeter depth samples, 0 meaning "no reading". Recordings use the PDR1
container so fixtures stay hand-writable and the repo stays device-free:

    bytes 0-3   magic ``PDR1``
    u32 LE      width
    u32 LE      height
    u32 LE      frameCount
    f64 LE      fps
    then frameCount frames of width*height u16 LE samples, row-major
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadHeader, BadMagic, MissingFile, TruncatedFile, ValueOutOfRange

MAGIC = b"PDR1"
_HEADER = struct.Struct("<4sIIId")

MAX_DEPTH_MM = 65535
SENSOR_MIN_MM = 400
SENSOR_MAX_MM = 8000

# Pixel scale shared with the default world mapping: the synthetic stage is
# drawn at 100 px per meter, so a performer at x meters sits at
# frameWidth/2 + 100*x columns.
STAGE_PIXELS_PER_METER = 100.0
DEFAULT_STAGE_HALF_WIDTH_M = 1.0
JUMP_RISE_PX = 40


class EndOfStream:
    """Sentinel returned by ``DepthStream.next_frame`` once a stream is exhausted."""

    def __repr__(self) -> str:  # pragma: no cover
        return "EndOfStream"


END_OF_STREAM = EndOfStream()


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """One depth image: ``samples`` is a (height, width) uint16 grid in millimeters."""

    width: int
    height: int
    samples: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.samples.shape != (self.height, self.width):
            raise ValueError(
                f"samples shape {self.samples.shape} != (height={self.height}, width={self.width})"
            )
        if self.samples.dtype != np.uint16:
            if self.samples.min(initial=0) < 0 or self.samples.max(initial=0) > MAX_DEPTH_MM:
                raise ValueError("depth samples must lie in [0, 65535]")
            object.__setattr__(self, "samples", self.samples.astype(np.uint16))
        self.samples.setflags(write=False)
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")


@dataclass
class PerformerState:
    """Stand-in for the live audience body in front of the sensor."""

    x: float = 0.0                 # meters, within stage bounds
    depth: float = 2000.0          # millimeters from the camera plane
    jump_phase: float = 0.0        # 0 = grounded, arc peaks at 0.5
    left_hand_raised: bool = False
    right_hand_raised: bool = False

    def validate(self, stage_half_width: float = DEFAULT_STAGE_HALF_WIDTH_M) -> None:
        if not -stage_half_width <= self.x <= stage_half_width:
            raise ValueError(f"performer x {self.x} outside stage ±{stage_half_width}")
        if not SENSOR_MIN_MM <= self.depth <= SENSOR_MAX_MM:
            raise ValueError(f"performer depth {self.depth} outside sensor range")
        if not 0.0 <= self.jump_phase <= 1.0:
            raise ValueError("jump_phase must lie in [0, 1]")


@dataclass(frozen=True)
class SynthConfig:
    """Pixel dimensions of the synthetic silhouette and its background."""

    body_height_px: int = 170
    body_width_px: int = 50
    head_radius_px: int = 15
    arm_length_px: int = 60
    frame_width: int = 320
    frame_height: int = 240
    background_depth: int = 6000

    def __post_init__(self) -> None:
        for name in ("body_height_px", "body_width_px", "head_radius_px",
                     "arm_length_px", "frame_width", "frame_height"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.background_depth <= MAX_DEPTH_MM:
            raise ValueError("background_depth must lie in (0, 65535]")


class DepthStream:
    """Single-consumer iterator over the frames of one PDR1 recording.

    Frames are decoded eagerly (recordings are fixture-sized) and returned as
    immutable values with timestamps k/fps for frame index k.
    """

    def __init__(self, width: int, height: int, fps: float, frames: np.ndarray):
        self.width = width
        self.height = height
        self.fps = fps
        self._frames = frames  # (frameCount, height, width) uint16
        self._cursor = 0

    @property
    def frame_count(self) -> int:
        return self._frames.shape[0]

    def next_frame(self) -> DepthFrame | EndOfStream:
        if self._cursor >= self.frame_count:
            return END_OF_STREAM
        k = self._cursor
        self._cursor += 1
        return self.frame_at(k)

    def frame_at(self, index: int) -> DepthFrame:
        """Random access used by looping sessions; does not move the cursor."""
        return DepthFrame(
            width=self.width,
            height=self.height,
            samples=self._frames[index],
            timestamp=index / self.fps,
        )

    def rewind(self) -> None:
        self._cursor = 0


def open_recording(path: str | Path) -> DepthStream:
    """Open a PDR1 recording, positioned at frame 0."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"recording not found: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size or data[:4] != MAGIC:
        raise BadMagic(f"not a PDR1 recording: {path}")
    _, width, height, frame_count, fps = _HEADER.unpack_from(data)
    if width == 0 or height == 0 or not math.isfinite(fps) or fps <= 0:
        raise BadMagic(f"corrupt PDR1 header in {path}")
    frame_bytes = width * height * 2
    need = _HEADER.size + frame_count * frame_bytes
    if len(data) < need:
        have = (len(data) - _HEADER.size) // frame_bytes
        raise TruncatedFile(
            f"{path} declares {frame_count} frames but payload holds {have}"
        )
    raw = np.frombuffer(data, dtype="<u2", count=frame_count * width * height,
                        offset=_HEADER.size)
    frames = raw.reshape(frame_count, height, width).astype(np.uint16)
    return DepthStream(width, height, fps, frames)


def next_frame(stream: DepthStream) -> DepthFrame | EndOfStream:
    """Functional alias for ``stream.next_frame()``."""
    return stream.next_frame()


def write_recording(path: str | Path, frames: list[DepthFrame], fps: float) -> None:
    """Encode frames as a PDR1 file. Decoding it back is byte-identical."""
    if not frames:
        raise ValueError("cannot write an empty recording")
    width, height = frames[0].width, frames[0].height
    for f in frames:
        if (f.width, f.height) != (width, height):
            raise ValueError("all frames in a recording must share dimensions")
    path = Path(path)
    with path.open("wb") as out:
        out.write(_HEADER.pack(MAGIC, width, height, len(frames), float(fps)))
        for f in frames:
            out.write(f.samples.astype("<u2").tobytes())


def parse_pgm(text: str) -> DepthFrame:
    """Parse a P2 (ASCII) PGM, gray values read directly as millimeters."""
    tokens: list[str] = []
    for line in text.splitlines():
        hash_at = line.find("#")
        if hash_at != -1:
            line = line[:hash_at]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise BadHeader("expected ASCII PGM magic 'P2'")
    if len(tokens) < 4:
        raise BadHeader("PGM header is incomplete")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise BadHeader(f"non-numeric PGM header field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise BadHeader("PGM dimensions must be positive")
    if not 0 < maxval <= MAX_DEPTH_MM:
        raise ValueOutOfRange(f"PGM maxval {maxval} outside (0, 65535]")
    raster = tokens[4:]
    if len(raster) != width * height:
        raise BadHeader(f"expected {width * height} samples, got {len(raster)}")
    try:
        values = np.array([int(t) for t in raster], dtype=np.int64)
    except ValueError as exc:
        raise BadHeader(f"non-numeric PGM sample: {exc}") from exc
    if values.min() < 0 or values.max() > maxval:
        raise ValueOutOfRange("PGM sample outside [0, maxval]")
    samples = values.astype(np.uint16).reshape(height, width)
    return DepthFrame(width=width, height=height, samples=samples, timestamp=0.0)


def write_pgm(frame: DepthFrame, path: str | Path) -> None:
    """Write a frame as ASCII PGM, the inverse of ``parse_pgm``."""
    lines = [f"P2\n{frame.width} {frame.height}\n{MAX_DEPTH_MM}\n"]
    for row in frame.samples:
        lines.append(" ".join(str(int(v)) for v in row) + "\n")
    Path(path).write_text("".join(lines))


def _disc_mask(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return dy * dy + dx * dx <= radius * radius


def _paint_box(canvas: np.ndarray, r0: int, r1: int, c0: int, c1: int) -> None:
    """Mark a clipped [r0, r1) x [c0, c1) rectangle on a boolean canvas."""
    h, w = canvas.shape
    r0, r1 = max(r0, 0), min(r1, h)
    c0, c1 = max(c0, 0), min(c1, w)
    if r0 < r1 and c0 < c1:
        canvas[r0:r1, c0:c1] = True


def synth_frame(performer: PerformerState, cfg: SynthConfig = SynthConfig(),
                t: float = 0.0) -> DepthFrame:
    """Draw the performer as a crude humanoid silhouette in a depth frame.

    The frame is ``background_depth`` everywhere except the silhouette (torso
    rectangle, head disc, arm bars), whose pixels carry ``performer.depth``.
    Raised arms are drawn as vertical bars reaching above the head line so
    that emitter detection can separate them geometrically. Pure function of
    its arguments; callers validate the performer upstream.
    """
    h, w = cfg.frame_height, cfg.frame_width
    body = np.zeros((h, w), dtype=bool)

    jump_off = int(round(JUMP_RISE_PX * math.sin(math.pi * performer.jump_phase)))
    feet_row = h - 1 - jump_off
    top_row = feet_row - cfg.body_height_px + 1
    cx = int(round(w / 2 + performer.x * STAGE_PIXELS_PER_METER))

    hr = cfg.head_radius_px
    half_bw = cfg.body_width_px // 2

    # Head disc centered one radius below the silhouette top line.
    head_cy, head_cx = top_row + hr, cx
    disc = _disc_mask(hr)
    r0, c0 = head_cy - hr, head_cx - hr
    rr0, rr1 = max(r0, 0), min(r0 + disc.shape[0], h)
    cc0, cc1 = max(c0, 0), min(c0 + disc.shape[1], w)
    if rr0 < rr1 and cc0 < cc1:
        body[rr0:rr1, cc0:cc1] |= disc[rr0 - r0:rr1 - r0, cc0 - c0:cc1 - c0]

    # Torso from just below the head down to the feet.
    torso_top = top_row + 2 * hr
    _paint_box(body, torso_top, feet_row + 1, cx - half_bw, cx + half_bw + 1)

    # Arms. Down: horizontal bar at shoulder height. Raised: vertical bar
    # offset from the head by ~1.8 head radii (keeps a clusterable gap at any
    # sensible pixel scale) and reaching ~1.2 radii above the head line.
    bar = max(3, hr // 3)
    shoulder = torso_top + 2
    raise_offset = int(round(1.8 * hr))
    raise_above = int(round(1.2 * hr))
    for side, raised in ((-1, performer.left_hand_raised),
                         (+1, performer.right_hand_raised)):
        if raised:
            inner = cx + side * (hr + raise_offset)
            c_lo, c_hi = sorted((inner, inner + side * bar))
            _paint_box(body, top_row - raise_above, shoulder + 1, c_lo, c_hi + 1)
        else:
            edge = cx + side * (half_bw + 1)
            far = edge + side * cfg.arm_length_px
            c_lo, c_hi = sorted((edge, far))
            _paint_box(body, shoulder, shoulder + bar, c_lo, c_hi + 1)

    samples = np.full((h, w), cfg.background_depth, dtype=np.uint16)
    samples[body] = int(round(performer.depth))
    return DepthFrame(width=w, height=h, samples=samples, timestamp=t)
