"""Body embodiment: depth-band filtering, world mapping, and emitter detection.

The band filter keeps exactly the pixels whose depth lies in the closed
interval [threshold - epsilon, threshold + epsilon], scanning row-major. A
depth of 0 is a "no reading" sentinel and never passes, regardless of band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import DepthFrame

DEFAULT_DEPTH_THRESHOLD_MM = 2000.0
DEFAULT_EPSILON_MM = 500.0


@dataclass(frozen=True)
class FilterConfig:
    depth_threshold: float = DEFAULT_DEPTH_THRESHOLD_MM
    epsilon: float = DEFAULT_EPSILON_MM
    stride: int = 1

    def __post_init__(self) -> None:
        if self.depth_threshold <= 0:
            raise ValueError("depth_threshold must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class MappingConfig:
    """Affine image->world transform: pixels to meters, depth to scene z."""

    pixels_per_meter_x: float = 100.0
    pixels_per_meter_y: float = 100.0
    depth_to_z: float = 0.001          # meters per millimeter
    origin_offset: tuple[float, float, float] = (0.0, 0.0, -2.0)
    mirror_x: bool = False

    def __post_init__(self) -> None:
        if self.pixels_per_meter_x <= 0 or self.pixels_per_meter_y <= 0:
            raise ValueError("pixel scale factors must be positive")
        if self.depth_to_z <= 0:
            raise ValueError("depth_to_z must be positive")


@dataclass(frozen=True)
class EmitterParams:
    """Constants of the head/raised-hand detector (see detect_emitters)."""

    cap_fraction: float = 0.15
    hand_height_fraction: float = 0.8
    gap_threshold: float = 0.25   # meters


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Filtered body points, either image space (x px, y px, depth mm) or
    world space (x, y, z meters). ``points`` is an (N, 3) float64 array in
    scan order."""

    points: np.ndarray
    frame_width: int
    frame_height: int
    timestamp: float = 0.0
    space: str = "image"   # "image" | "world"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class EmitterSet:
    """Detected spawn sources: an optional head point and up to two hands.

    ``fallback_all`` marks a detection failure where the whole cloud should
    act as the emitter source instead.
    """

    head: tuple[float, float, float] | None = None
    hands: tuple[tuple[float, float, float], ...] = ()
    fallback_all: bool = False

    def source_points(self) -> list[tuple[float, float, float]]:
        pts = []
        if self.head is not None:
            pts.append(self.head)
        pts.extend(self.hands)
        return pts


def extract_point_cloud(frame: DepthFrame, cfg: FilterConfig = FilterConfig()) -> PointCloud:
    """Keep the pixels (sampled at cfg.stride) whose depth lies in the band.

    Output order is row-major scan order, so it is deterministic. Zero-depth
    pixels are always rejected: 0 is a sensor sentinel, not a distance.
    """
    grid = frame.samples[::cfg.stride, ::cfg.stride].astype(np.float64)
    lo = cfg.depth_threshold - cfg.epsilon
    hi = cfg.depth_threshold + cfg.epsilon
    mask = (grid >= lo) & (grid <= hi) & (grid != 0)
    ys, xs = np.nonzero(mask)
    pts = np.column_stack((xs * cfg.stride, ys * cfg.stride, grid[ys, xs]))
    return PointCloud(points=pts, frame_width=frame.width,
                      frame_height=frame.height, timestamp=frame.timestamp)


def to_world(p: tuple[float, float, float], frame_dims: tuple[int, int],
             mapping: MappingConfig) -> tuple[float, float, float]:
    """Map one image point (x px, y px, depth mm) into world meters.

    x grows rightward (flipped when mirror_x), y upward from the frame
    bottom, z into the scene with depth. Affine and invertible on its domain.
    """
    width, height = frame_dims
    ox, oy, oz = mapping.origin_offset
    sign = -1.0 if mapping.mirror_x else 1.0
    x = sign * (p[0] - width / 2) / mapping.pixels_per_meter_x + ox
    y = (height - p[1]) / mapping.pixels_per_meter_y + oy
    z = p[2] * mapping.depth_to_z + oz
    return (x, y, z)


def from_world(wp: tuple[float, float, float], frame_dims: tuple[int, int],
               mapping: MappingConfig) -> tuple[int, int, int]:
    """Analytic inverse of ``to_world``; integer pixel coordinates round-trip."""
    width, height = frame_dims
    ox, oy, oz = mapping.origin_offset
    sign = -1.0 if mapping.mirror_x else 1.0
    px = sign * (wp[0] - ox) * mapping.pixels_per_meter_x + width / 2
    py = height - (wp[1] - oy) * mapping.pixels_per_meter_y
    depth = (wp[2] - oz) / mapping.depth_to_z
    return (int(round(px)), int(round(py)), int(round(depth)))


def cloud_to_world(cloud: PointCloud, mapping: MappingConfig) -> PointCloud:
    """Vectorized ``to_world`` over a whole image-space cloud."""
    if cloud.space != "image":
        raise ValueError("cloud is already in world space")
    width, height = cloud.frame_width, cloud.frame_height
    ox, oy, oz = mapping.origin_offset
    sign = -1.0 if mapping.mirror_x else 1.0
    pts = cloud.points
    out = np.empty_like(pts)
    out[:, 0] = sign * (pts[:, 0] - width / 2) / mapping.pixels_per_meter_x + ox
    out[:, 1] = (height - pts[:, 1]) / mapping.pixels_per_meter_y + oy
    out[:, 2] = pts[:, 2] * mapping.depth_to_z + oz
    return PointCloud(points=out, frame_width=width, frame_height=height,
                      timestamp=cloud.timestamp, space="world")


def downsample(cloud: PointCloud, target_max: int) -> PointCloud:
    """Bound cloud size: keep every ceil(n/target_max)-th point in scan order."""
    if target_max < 1:
        raise ValueError("target_max must be >= 1")
    n = len(cloud)
    if n <= target_max:
        return cloud
    step = -(-n // target_max)
    return PointCloud(points=cloud.points[::step], frame_width=cloud.frame_width,
                      frame_height=cloud.frame_height, timestamp=cloud.timestamp,
                      space=cloud.space)


def detect_emitters(cloud: PointCloud, params: EmitterParams = EmitterParams()) -> EmitterSet:
    """Find head and raised-hand emitter regions in a world-space cloud.

    The top band of the body (points within cap_fraction of the cloud's
    height from its top) is clustered by horizontal gaps. The cluster nearest
    the cloud's x-centroid is the head; remaining clusters high enough above
    the feet (hand_height_fraction of body height) are hands, at most two,
    preferring larger clusters.
    """
    if len(cloud) == 0:
        return EmitterSet()
    pts = cloud.points
    ys = pts[:, 1]
    min_y, max_y = float(ys.min()), float(ys.max())
    height = max_y - min_y

    band = pts[ys >= max_y - params.cap_fraction * height]
    order = np.argsort(band[:, 0], kind="stable")
    band = band[order]
    xs = band[:, 0]
    if len(band) == 0:  # unreachable for nonempty clouds; kept as a guard
        return EmitterSet(fallback_all=True)

    breaks = np.nonzero(np.diff(xs) > params.gap_threshold)[0] + 1
    clusters = np.split(band, breaks)

    centroid_x = float(pts[:, 0].mean())
    centroids = [c.mean(axis=0) for c in clusters]
    head_idx = int(np.argmin([abs(c[0] - centroid_x) for c in centroids]))
    head = tuple(float(v) for v in centroids[head_idx])

    hand_floor = min_y + params.hand_height_fraction * height
    candidates = [
        (len(clusters[i]), -centroids[i][0], i)
        for i in range(len(clusters))
        if i != head_idx and centroids[i][1] >= hand_floor
    ]
    candidates.sort(reverse=True)
    hands = tuple(
        tuple(float(v) for v in centroids[i]) for _, _, i in candidates[:2]
    )
    return EmitterSet(head=head, hands=hands, fallback_all=False)
