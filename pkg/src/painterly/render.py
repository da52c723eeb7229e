"""Software rasterizer for the live painting.

Painter's algorithm, fully deterministic: facades first (sorted by mean
depth, farthest first, perspective-correct textured quads), then placed
objects and particles as depth-sorted square billboards interleaved with the
embodiment's point splats. Texture lookups are nearest-neighbor and alpha is
thresholded, never blended, so identical inputs produce byte-identical
output on any platform.

Mirroring is an exact horizontal flip of the unmirrored composite, which
makes the mirror-equivalence property hold bit-for-bit by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scene import PainterlyScene, WorldState

NEAR_PLANE_M = 0.01
ALPHA_OPAQUE = 128


@dataclass(frozen=True)
class Camera:
    position: tuple[float, float, float] = (0.0, 1.4, -3.4)
    focal_length_px: float = 620.0
    image_width: int = 960
    image_height: int = 540
    mirror: bool = True

    def __post_init__(self) -> None:
        if self.focal_length_px <= 0:
            raise ValueError("focal_length_px must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class RenderStyle:
    splat_radius_px: int = 2
    splat_color: tuple[int, int, int] = (0, 0, 0)
    background: tuple[int, int, int] = (232, 224, 204)


@dataclass(eq=False)
class Image:
    """Row-major RGB8 raster; ``pixels`` is a (height, width, 3) uint8 array."""

    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


def project(p: tuple[float, float, float], cam: Camera) -> tuple[float, float, float] | None:
    """Pinhole projection to (u px, v px, depth m); None when behind the camera.

    The camera looks down +z with no rotation. ``u`` flips about the image
    center column when the camera mirrors.
    """
    depth = p[2] - cam.position[2]
    if depth <= NEAR_PLANE_M:
        return None
    cx, cy = cam.image_width / 2, cam.image_height / 2
    du = cam.focal_length_px * (p[0] - cam.position[0]) / depth
    u = cx - du if cam.mirror else cx + du
    v = cy - cam.focal_length_px * (p[1] - cam.position[1]) / depth
    return (u, v, depth)


def _project_unmirrored(p, cam: Camera):
    depth = p[2] - cam.position[2]
    if depth <= NEAR_PLANE_M:
        return None
    u = cam.image_width / 2 + cam.focal_length_px * (p[0] - cam.position[0]) / depth
    v = cam.image_height / 2 - cam.focal_length_px * (p[1] - cam.position[1]) / depth
    return (u, v, depth)


def _fill_textured_triangle(canvas: np.ndarray, pts, uvs, depths, texture: np.ndarray) -> None:
    """Rasterize one perspective-correct textured triangle onto the canvas.

    ``pts`` are screen (u, v) corners, ``uvs`` their texture coordinates in
    [0, 1] with t growing upward, ``depths`` camera-space distances.
    """
    h, w = canvas.shape[:2]
    (x0, y0), (x1, y1), (x2, y2) = pts
    denom = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
    if denom == 0:
        return
    min_x = max(int(np.floor(min(x0, x1, x2) - 0.5)), 0)
    max_x = min(int(np.ceil(max(x0, x1, x2) + 0.5)), w - 1)
    min_y = max(int(np.floor(min(y0, y1, y2) - 0.5)), 0)
    max_y = min(int(np.ceil(max(y0, y1, y2) + 0.5)), h - 1)
    if min_x > max_x or min_y > max_y:
        return

    cols = np.arange(min_x, max_x + 1, dtype=np.float64) + 0.5
    rows = np.arange(min_y, max_y + 1, dtype=np.float64) + 0.5
    px, py = np.meshgrid(cols, rows)

    w0 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) / denom   # opposite corner 2
    w1 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) / denom   # opposite corner 0
    w2 = 1.0 - w0 - w1
    inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not inside.any():
        return

    b0, b1, b2 = w1[inside], w2[inside], w0[inside]
    inv_d = b0 / depths[0] + b1 / depths[1] + b2 / depths[2]
    s = (b0 * uvs[0][0] / depths[0] + b1 * uvs[1][0] / depths[1]
         + b2 * uvs[2][0] / depths[2]) / inv_d
    t = (b0 * uvs[0][1] / depths[0] + b1 * uvs[1][1] / depths[1]
         + b2 * uvs[2][1] / depths[2]) / inv_d

    th, tw = texture.shape[:2]
    tx = np.clip((s * tw).astype(np.int64), 0, tw - 1)
    ty = np.clip(((1.0 - t) * th).astype(np.int64), 0, th - 1)
    texels = texture[ty, tx]

    ys, xs = np.nonzero(inside)
    opaque = texels[:, 3] >= ALPHA_OPAQUE
    canvas[ys[opaque] + min_y, xs[opaque] + min_x] = texels[opaque, :3]


def _draw_facades(canvas: np.ndarray, scene: PainterlyScene, cam: Camera) -> None:
    ordered = sorted(scene.facades,
                     key=lambda f: -f.mean_depth_from(cam.position[2]))
    uv_corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    for facade in ordered:
        projected = [_project_unmirrored(c, cam) for c in facade.corners]
        if any(p is None for p in projected):
            continue  # quads straddling the near plane are not drawn
        pts = [(p[0], p[1]) for p in projected]
        depths = [p[2] for p in projected]
        for tri in ((0, 1, 2), (0, 2, 3)):
            _fill_textured_triangle(
                canvas,
                [pts[i] for i in tri],
                [uv_corners[i] for i in tri],
                [depths[i] for i in tri],
                facade.texture,
            )


def _draw_billboard(canvas: np.ndarray, center_uvd, size_m: float,
                    sprite: np.ndarray, focal: float) -> None:
    u, v, depth = center_uvd
    half = focal * (size_m / 2.0) / depth
    if half <= 0:
        return
    h, w = canvas.shape[:2]
    c_lo = int(np.ceil(u - half - 0.5))
    c_hi = int(np.ceil(u + half - 0.5))
    r_lo = int(np.ceil(v - half - 0.5))
    r_hi = int(np.ceil(v + half - 0.5))
    c0, c1 = max(c_lo, 0), min(c_hi, w)
    r0, r1 = max(r_lo, 0), min(r_hi, h)
    if c0 >= c1 or r0 >= r1:
        return
    sh, sw = sprite.shape[:2]
    cols = np.arange(c0, c1)
    rows = np.arange(r0, r1)
    sx = np.clip(((cols + 0.5 - (u - half)) / (2 * half) * sw).astype(np.int64), 0, sw - 1)
    sy = np.clip(((rows + 0.5 - (v - half)) / (2 * half) * sh).astype(np.int64), 0, sh - 1)
    texels = sprite[sy[:, None], sx[None, :]]
    opaque = texels[:, :, 3] >= ALPHA_OPAQUE
    region = canvas[r0:r1, c0:c1]
    region[opaque] = texels[opaque][:, :3]


def _flush_splats(canvas: np.ndarray, centers: list[tuple[int, int]],
                  style: RenderStyle) -> None:
    if not centers:
        return
    h, w = canvas.shape[:2]
    r = style.splat_radius_px
    span = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = (dy * dy + dx * dx) <= r * r
    dy, dx = dy[keep], dx[keep]
    cs = np.asarray(centers, dtype=np.int64)
    rows = cs[:, 0][:, None] + dy[None, :]
    cols = cs[:, 1][:, None] + dx[None, :]
    ok = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    canvas[rows[ok], cols[ok]] = style.splat_color
    centers.clear()


_BACKDROP_CACHE: dict[tuple, tuple[PainterlyScene, np.ndarray]] = {}


def _scene_backdrop(scene: PainterlyScene, cam: Camera, style: RenderStyle) -> np.ndarray:
    """Facade-only composite, cached per (scene, camera, style)."""
    key = (id(scene), cam, style)
    hit = _BACKDROP_CACHE.get(key)
    if hit is not None and hit[0] is scene:
        return hit[1]
    canvas = np.empty((cam.image_height, cam.image_width, 3), dtype=np.uint8)
    canvas[:] = style.background
    _draw_facades(canvas, scene, cam)
    canvas.setflags(write=False)
    if len(_BACKDROP_CACHE) >= 4:
        _BACKDROP_CACHE.pop(next(iter(_BACKDROP_CACHE)))
    _BACKDROP_CACHE[key] = (scene, canvas)
    return canvas


def render_frame(world: WorldState, cam: Camera = Camera(),
                 style: RenderStyle = RenderStyle()) -> Image:
    """Composite a WorldState into the live painting. Pure and byte-stable."""
    unmirrored = Camera(position=cam.position, focal_length_px=cam.focal_length_px,
                        image_width=cam.image_width, image_height=cam.image_height,
                        mirror=False)
    canvas = _scene_backdrop(world.scene, unmirrored, style).copy()

    # Depth-sorted draw items: billboards (placed objects + particles) and
    # embodiment splats share one painter's pass, farthest first.
    items = []
    seq = 0
    for obj in world.scene.placed_objects:
        p = _project_unmirrored(obj.position, unmirrored)
        if p is not None:
            sprite = world.scene.palette_entry(obj.kind).sprite
            items.append((-p[2], 0, seq, ("billboard", p, obj.scale, sprite)))
            seq += 1
    for particle in world.particles:
        p = _project_unmirrored(tuple(particle.position), unmirrored)
        if p is not None:
            entry = world.scene.palette_entry(particle.kind)
            items.append((-p[2], 1, seq, ("billboard", p, entry.size, entry.sprite)))
            seq += 1
    for point in world.cloud.points:
        p = _project_unmirrored((point[0], point[1], point[2]), unmirrored)
        if p is not None:
            items.append((-p[2], 2, seq, ("splat", p)))
            seq += 1
    items.sort(key=lambda it: (it[0], it[1], it[2]))

    pending_splats: list[tuple[int, int]] = []
    for _, _, _, payload in items:
        if payload[0] == "billboard":
            _flush_splats(canvas, pending_splats, style)
            _, p, size, sprite = payload
            _draw_billboard(canvas, p, size, sprite, cam.focal_length_px)
        else:
            u, v, _ = payload[1]
            pending_splats.append((int(np.floor(v)), int(np.floor(u))))
    _flush_splats(canvas, pending_splats, style)

    if cam.mirror:
        canvas = np.ascontiguousarray(canvas[:, ::-1])
    return Image(pixels=canvas)


def write_image(img: Image, path: str | Path, format: str | None = None) -> None:
    """Write PPM (P6 binary, maxval 255) or PNG (standard RGB8)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).upper()
    if fmt == "PPM":
        header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
        path.write_bytes(header + img.pixels.tobytes())
    elif fmt == "PNG":
        from PIL import Image as PILImage

        PILImage.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image format: {fmt}")


def read_ppm(path: str | Path) -> Image:
    """Read back a P6 PPM written by ``write_image``."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError("not a P6 PPM")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3,
                           offset=pos).reshape(height, width, 3).copy()
    return Image(pixels=pixels)
