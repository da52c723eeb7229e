"""The painterly world: a three-facade courtyard with placed objects.

Scenes load from a strict JSON descriptor (unknown keys rejected, every
invariant checked with a diagnostic naming the offending field) and are
immutable afterwards. ``compose`` assembles the per-tick world state from a
scene, a body cloud, a particle snapshot, and the detected emitters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embodiment import EmitterSet, PointCloud
from .errors import MissingAsset, SchemaError, ValidationError
from .particles import Particle

PLANARITY_TOLERANCE_M = 1e-6


@dataclass(frozen=True, eq=False)
class Facade:
    name: str
    texture_path: Path
    corners: np.ndarray          # (4, 3) world meters
    texture: np.ndarray          # (H, W, 4) RGBA8

    def mean_depth_from(self, cam_z: float) -> float:
        return float(self.corners[:, 2].mean() - cam_z)


@dataclass(frozen=True)
class PlacedObject:
    kind: str
    position: tuple[float, float, float]
    scale: float


@dataclass(frozen=True, eq=False)
class PaletteEntry:
    kind: str
    sprite_path: Path
    size: float                  # nominal billboard edge, meters
    sprite: np.ndarray           # (H, W, 4) RGBA8


@dataclass(frozen=True)
class Bounds:
    min: tuple[float, float, float]
    max: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class PainterlyScene:
    facades: tuple[Facade, ...]
    placed_objects: tuple[PlacedObject, ...]
    palette: tuple[PaletteEntry, ...]
    ground_y: float
    bounds: Bounds
    descriptor: dict             # raw JSON for wire echo

    def palette_kinds(self) -> list[str]:
        return [p.kind for p in self.palette]

    def palette_entry(self, kind: str) -> PaletteEntry:
        for entry in self.palette:
            if entry.kind == kind:
                return entry
        raise KeyError(kind)


@dataclass(frozen=True, eq=False)
class WorldState:
    """Everything one tick produces: the unit of rendering and streaming."""

    tick: int
    cloud: PointCloud
    particles: list[Particle]
    emitters: EmitterSet
    scene: PainterlyScene


def _load_rgba(path: Path) -> np.ndarray:
    from PIL import Image as PILImage

    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGBA"), dtype=np.uint8)
    arr.setflags(write=False)
    return arr


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    missing = required - obj.keys()
    if missing:
        raise SchemaError(f"{where}: missing key(s) {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise SchemaError(f"{where}: unknown key(s) {sorted(unknown)}")


def _as_vec3(value, where: str) -> tuple[float, float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise SchemaError(f"{where}: expected [x, y, z] numbers")
    return (float(value[0]), float(value[1]), float(value[2]))


def _check_planar(corners: np.ndarray, name: str) -> None:
    a, b, c, d = corners
    normal = np.cross(b - a, c - a)
    norm = np.linalg.norm(normal)
    if norm == 0:
        raise ValidationError(f"facade '{name}': degenerate corners")
    dist = abs(float(np.dot(d - a, normal / norm)))
    if dist > PLANARITY_TOLERANCE_M:
        raise ValidationError(
            f"facade '{name}': corners not planar (deviation {dist:.2e} m)"
        )


def _in_bounds(p: tuple[float, float, float], bounds: Bounds) -> bool:
    return all(bounds.min[i] <= p[i] <= bounds.max[i] for i in range(3))


def load_scene(descriptor_path: str | Path) -> PainterlyScene:
    """Load and validate a scene descriptor; texture/sprite files must exist."""
    descriptor_path = Path(descriptor_path)
    if not descriptor_path.is_file():
        raise MissingAsset(f"scene descriptor not found: {descriptor_path}")
    try:
        raw = json.loads(descriptor_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scene descriptor is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("scene descriptor must be a JSON object")

    _require_keys(raw, {"facades", "objects", "palette", "groundY", "bounds"},
                  set(), "scene")

    bounds_obj = raw["bounds"]
    if not isinstance(bounds_obj, dict):
        raise SchemaError("bounds: expected an object with min/max")
    _require_keys(bounds_obj, {"min", "max"}, set(), "bounds")
    bounds = Bounds(_as_vec3(bounds_obj["min"], "bounds.min"),
                    _as_vec3(bounds_obj["max"], "bounds.max"))
    if any(bounds.min[i] >= bounds.max[i] for i in range(3)):
        raise ValidationError("bounds: min must be strictly below max on every axis")

    ground_y = raw["groundY"]
    if not isinstance(ground_y, (int, float)) or isinstance(ground_y, bool):
        raise SchemaError("groundY: expected a number")
    if not bounds.min[1] <= ground_y <= bounds.max[1]:
        raise ValidationError(f"groundY {ground_y} lies outside bounds")

    base = descriptor_path.parent

    facades_raw = raw["facades"]
    if not isinstance(facades_raw, list) or len(facades_raw) != 3:
        raise ValidationError("exactly 3 facades required")
    facades = []
    for i, f in enumerate(facades_raw):
        where = f"facades[{i}]"
        if not isinstance(f, dict):
            raise SchemaError(f"{where}: expected an object")
        _require_keys(f, {"name", "texture", "corners"}, set(), where)
        if not isinstance(f["name"], str):
            raise SchemaError(f"{where}.name: expected a string")
        if not isinstance(f["corners"], list) or len(f["corners"]) != 4:
            raise SchemaError(f"{where}.corners: expected 4 corner points")
        corners = np.array(
            [_as_vec3(c, f"{where}.corners[{j}]") for j, c in enumerate(f["corners"])],
            dtype=np.float64,
        )
        _check_planar(corners, f["name"])
        tex_path = base / f["texture"]
        if not tex_path.is_file():
            raise MissingAsset(f"{where}: texture not found: {tex_path}")
        corners.setflags(write=False)
        facades.append(Facade(name=f["name"], texture_path=tex_path,
                              corners=corners, texture=_load_rgba(tex_path)))

    palette_raw = raw["palette"]
    if not isinstance(palette_raw, list):
        raise SchemaError("palette: expected an array")
    palette = []
    seen_kinds: set[str] = set()
    for i, entry in enumerate(palette_raw):
        where = f"palette[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        _require_keys(entry, {"kind", "sprite", "size"}, set(), where)
        kind = entry["kind"]
        if not isinstance(kind, str):
            raise SchemaError(f"{where}.kind: expected a string")
        if kind in seen_kinds:
            raise ValidationError(f"{where}: duplicate palette kind '{kind}'")
        seen_kinds.add(kind)
        size = entry["size"]
        if not isinstance(size, (int, float)) or isinstance(size, bool) or size <= 0:
            raise SchemaError(f"{where}.size: expected a positive number")
        sprite_path = base / entry["sprite"]
        if not sprite_path.is_file():
            raise MissingAsset(f"{where}: sprite not found: {sprite_path}")
        palette.append(PaletteEntry(kind=kind, sprite_path=sprite_path,
                                    size=float(size), sprite=_load_rgba(sprite_path)))

    objects_raw = raw["objects"]
    if not isinstance(objects_raw, list):
        raise SchemaError("objects: expected an array")
    placed = []
    for i, obj in enumerate(objects_raw):
        where = f"objects[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        _require_keys(obj, {"kind", "position", "scale"}, set(), where)
        kind = obj["kind"]
        if kind not in seen_kinds:
            raise ValidationError(f"{where}: kind '{kind}' not in palette")
        position = _as_vec3(obj["position"], f"{where}.position")
        if not _in_bounds(position, bounds):
            raise ValidationError(f"{where}: position {position} outside bounds")
        scale = obj["scale"]
        if not isinstance(scale, (int, float)) or isinstance(scale, bool) or scale <= 0:
            raise SchemaError(f"{where}.scale: expected a positive number")
        placed.append(PlacedObject(kind=kind, position=position, scale=float(scale)))

    return PainterlyScene(
        facades=tuple(facades),
        placed_objects=tuple(placed),
        palette=tuple(palette),
        ground_y=float(ground_y),
        bounds=bounds,
        descriptor=raw,
    )


def clamp_to_bounds(p: tuple[float, float, float],
                    scene: PainterlyScene) -> tuple[float, float, float]:
    """Componentwise clamp into the scene bounds; identity for interior points."""
    b = scene.bounds
    return tuple(min(max(p[i], b.min[i]), b.max[i]) for i in range(3))


def compose(scene: PainterlyScene, cloud: PointCloud, particles: list[Particle],
            emitters: EmitterSet, tick: int) -> WorldState:
    """Assemble a WorldState, clamping cloud points into bounds.

    Pure: inputs are not mutated; the clamped cloud is a fresh array and the
    particle list is snapshot-copied.
    """
    b = scene.bounds
    clamped = np.clip(cloud.points,
                      np.array(b.min, dtype=np.float64),
                      np.array(b.max, dtype=np.float64))
    return WorldState(
        tick=tick,
        cloud=PointCloud(points=clamped, frame_width=cloud.frame_width,
                         frame_height=cloud.frame_height,
                         timestamp=cloud.timestamp, space="world"),
        particles=[p.copy() for p in particles],
        emitters=emitters,
        scene=scene,
    )
