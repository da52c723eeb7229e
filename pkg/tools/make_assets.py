"""Regenerate the bundled assets: textures, sprites, scene, scripts, recording.

Everything here is deterministic (seeded numpy) and the outputs are
committed, so this only needs to run when the fixture art changes:

    python3 tools/make_assets.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

ASSETS = Path(__file__).resolve().parents[1] / "src" / "painterly" / "assets"


def wash(width: int, height: int, top, bottom, rng, speckle=6) -> np.ndarray:
    """Vertical color gradient with paper-like speckle."""
    t = np.linspace(0.0, 1.0, height)[:, None, None]
    top = np.asarray(top, dtype=np.float64)
    bottom = np.asarray(bottom, dtype=np.float64)
    img = top[None, None, :] * (1 - t) + bottom[None, None, :] * t
    img = img + rng.normal(0, speckle, size=(height, width, 3))
    return np.clip(img, 0, 255)


def rect(img, x0, y0, x1, y1, color) -> None:
    img[y0:y1, x0:x1] = color


def disc(img, cx, cy, r, color) -> None:
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    img[mask] = color


def save_rgb(img: np.ndarray, path: Path) -> None:
    Image.fromarray(img.astype(np.uint8), mode="RGB").save(path)
    print("wrote", path)


def save_rgba(rgb: np.ndarray, alpha: np.ndarray, path: Path) -> None:
    rgba = np.dstack([rgb.astype(np.uint8), (alpha * 255).astype(np.uint8)])
    Image.fromarray(rgba, mode="RGBA").save(path)
    print("wrote", path)


def back_facade(rng) -> np.ndarray:
    img = wash(512, 384, (244, 232, 206), (226, 204, 168), rng)
    # distant rooflines
    for x0, w, h, c in ((30, 120, 90, (164, 96, 80)), (190, 150, 120, (150, 84, 72)),
                        (370, 110, 100, (172, 104, 88))):
        rect(img, x0, 384 - 60 - h, x0 + w, 384 - 60, c)
        rect(img, x0 - 8, 384 - 60 - h - 18, x0 + w + 8, 384 - 60 - h, (96, 70, 64))
    disc(img, 440, 66, 34, (238, 176, 120))          # low sun
    rect(img, 0, 384 - 60, 512, 384, (120, 106, 88))  # base band
    for x in range(20, 512, 48):                      # fence strokes
        rect(img, x, 384 - 56, x + 6, 384 - 8, (92, 80, 66))
    return img


def left_facade(rng) -> np.ndarray:
    img = wash(320, 384, (214, 228, 206), (176, 198, 170), rng)
    for i, x in enumerate((48, 128, 224)):           # bamboo stalks
        rect(img, x, 24, x + 14, 372, (92, 128, 84))
        for y in range(48, 360, 52):
            rect(img, x - 2, y, x + 16, y + 5, (70, 102, 66))
        disc(img, x + 34, 70 + i * 60, 18, (122, 156, 104))
    rect(img, 0, 352, 320, 384, (128, 128, 100))
    return img


def right_facade(rng) -> np.ndarray:
    img = wash(320, 384, (240, 220, 196), (220, 192, 160), rng)
    rect(img, 70, 60, 250, 240, (104, 84, 70))       # window frame
    rect(img, 84, 74, 236, 226, (198, 214, 222))     # panes
    rect(img, 156, 74, 164, 226, (104, 84, 70))
    rect(img, 84, 146, 236, 154, (104, 84, 70))
    rect(img, 40, 280, 64, 368, (150, 96, 80))       # hanging scroll
    disc(img, 52, 300, 8, (88, 60, 52))
    rect(img, 0, 352, 320, 384, (136, 120, 96))
    return img


def sprite_bowl() -> tuple[np.ndarray, np.ndarray]:
    size = 64
    rgb = np.zeros((size, size, 3))
    alpha = np.zeros((size, size))
    ys, xs = np.mgrid[0:size, 0:size]
    body = ((xs - 32) ** 2 + (ys - 30) ** 2 <= 26 * 26) & (ys >= 30)
    rgb[body] = (188, 110, 84)
    alpha[body] = 1
    rim = body & (ys <= 36)
    rgb[rim] = (214, 140, 108)
    stripe = body & (ys >= 44) & (ys <= 50)
    rgb[stripe] = (126, 72, 58)
    return rgb, alpha


def sprite_fish() -> tuple[np.ndarray, np.ndarray]:
    size = 64
    rgb = np.zeros((size, size, 3))
    alpha = np.zeros((size, size))
    ys, xs = np.mgrid[0:size, 0:size]
    body = ((xs - 28) / 20.0) ** 2 + ((ys - 32) / 12.0) ** 2 <= 1.0
    tail = (xs >= 44) & (xs <= 58) & (np.abs(ys - 32) <= (xs - 44) * 0.8)
    fish = body | tail
    rgb[fish] = (224, 130, 96)
    alpha[fish] = 1
    belly = body & (ys > 34)
    rgb[belly] = (242, 188, 150)
    eye = (xs - 16) ** 2 + (ys - 28) ** 2 <= 4
    rgb[eye] = (40, 34, 30)
    return rgb, alpha


def sprite_lantern() -> tuple[np.ndarray, np.ndarray]:
    size = 64
    rgb = np.zeros((size, size, 3))
    alpha = np.zeros((size, size))
    ys, xs = np.mgrid[0:size, 0:size]
    body = ((xs - 32) / 18.0) ** 2 + ((ys - 32) / 22.0) ** 2 <= 1.0
    rgb[body] = (210, 86, 70)
    alpha[body] = 1
    for y in (18, 32, 46):
        band = body & (np.abs(ys - y) <= 1)
        rgb[band] = (150, 52, 44)
    cap = (np.abs(xs - 32) <= 10) & (ys >= 6) & (ys <= 12)
    base = (np.abs(xs - 32) <= 10) & (ys >= 52) & (ys <= 58)
    for part in (cap, base):
        rgb[part] = (116, 88, 50)
        alpha[part] = 1
    return rgb, alpha


def sprite_fan() -> tuple[np.ndarray, np.ndarray]:
    size = 64
    rgb = np.zeros((size, size, 3))
    alpha = np.zeros((size, size))
    ys, xs = np.mgrid[0:size, 0:size]
    dx, dy = xs - 32.0, 54.0 - ys
    radius = np.hypot(dx, dy)
    angle = np.arctan2(dy, dx)
    blade = (radius <= 40) & (radius >= 8) & (angle >= 0.35) & (angle <= np.pi - 0.35)
    rgb[blade] = (228, 196, 134)
    alpha[blade] = 1
    ribs = blade & (np.mod((angle - 0.35) / (np.pi - 0.7) * 7, 1.0) < 0.16)
    rgb[ribs] = (168, 128, 84)
    handle = (np.abs(xs - 32) <= 2) & (ys >= 50) & (ys <= 62)
    rgb[handle] = (120, 86, 56)
    alpha[handle] = 1
    return rgb, alpha


COURTYARD = {
    "facades": [
        {"name": "back", "texture": "textures/back.png",
         "corners": [[-2, 0, 1.5], [2, 0, 1.5], [2, 3, 1.5], [-2, 3, 1.5]]},
        {"name": "left", "texture": "textures/left.png",
         "corners": [[-2, 0, -1.5], [-2, 0, 1.5], [-2, 3, 1.5], [-2, 3, -1.5]]},
        {"name": "right", "texture": "textures/right.png",
         "corners": [[2, 0, 1.5], [2, 0, -1.5], [2, 3, -1.5], [2, 3, 1.5]]},
    ],
    "objects": [
        {"kind": "bowl", "position": [-1.3, 0.3, 0.9], "scale": 0.5},
        {"kind": "lantern", "position": [1.5, 1.9, 1.2], "scale": 0.45},
        {"kind": "fish", "position": [-0.7, 2.2, 1.0], "scale": 0.4},
        {"kind": "fan", "position": [0.9, 0.35, 0.4], "scale": 0.5},
        {"kind": "bowl", "position": [1.2, 0.25, -0.6], "scale": 0.35},
    ],
    "palette": [
        {"kind": "bowl", "sprite": "sprites/bowl.png", "size": 0.28},
        {"kind": "fish", "sprite": "sprites/fish.png", "size": 0.3},
        {"kind": "lantern", "sprite": "sprites/lantern.png", "size": 0.32},
        {"kind": "fan", "sprite": "sprites/fan.png", "size": 0.26},
    ],
    "groundY": 0.0,
    "bounds": {"min": [-2, 0, -1.5], "max": [2, 3, 1.5]},
}

FIXTURE_SCRIPT = {
    "fps": 20,
    "durationSeconds": 2.0,
    "synth": {
        "bodyHeightPx": 85, "bodyWidthPx": 25, "headRadiusPx": 8,
        "armLengthPx": 30, "frameWidth": 160, "frameHeight": 120,
        "backgroundDepth": 6000,
    },
    "keyframes": [
        {"t": 0.0, "x": -0.45, "depth": 2200},
        {"t": 0.6, "x": 0.0, "depth": 2000, "rightHand": True},
        {"t": 1.2, "x": 0.3, "depth": 1900, "jumpPhase": 0.0,
         "rightHand": True, "leftHand": True},
        {"t": 1.8, "x": 0.35, "depth": 1900, "jumpPhase": 1.0,
         "rightHand": True, "leftHand": True},
        {"t": 2.0, "x": 0.4, "depth": 1950},
    ],
}

BENCH_SCRIPT = {
    "fps": 30,
    "durationSeconds": 1.0,
    "synth": {
        "bodyHeightPx": 340, "bodyWidthPx": 100, "headRadiusPx": 30,
        "armLengthPx": 120, "frameWidth": 640, "frameHeight": 480,
        "backgroundDepth": 6000,
    },
    "keyframes": [
        {"t": 0.0, "x": -0.5, "depth": 2100},
        {"t": 0.5, "x": 0.0, "depth": 2000, "leftHand": True},
        {"t": 1.0, "x": 0.5, "depth": 1950, "leftHand": True, "rightHand": True},
    ],
}

REPLAY_CONFIG = {
    "source": {"type": "recording", "path": "fixtures/performer_160x120.pdr1"},
    "seed": 0,
    "tickRate": 60,
    "filter": {"depthThreshold": 2000, "epsilon": 500, "stride": 1},
    "mapping": {"pixelsPerMeterX": 50, "pixelsPerMeterY": 50, "depthToZ": 0.001,
                "originOffset": [0, 0, -2.0], "mirrorX": False},
    "scenePath": "courtyard.json",
    "snapshotPointBudget": 2000,
    "camera": {"position": [0, 1.4, -3.4], "focalLengthPx": 310,
               "imageWidth": 480, "imageHeight": 270, "mirror": True},
}

BENCH_CONFIG = {
    "source": {"type": "synthetic"},
    "seed": 0,
    "tickRate": 60,
    "filter": {"depthThreshold": 2000, "epsilon": 500, "stride": 1},
    "mapping": {"pixelsPerMeterX": 200, "pixelsPerMeterY": 200, "depthToZ": 0.001,
                "originOffset": [0, 0, -2.0], "mirrorX": False},
    "scenePath": "courtyard.json",
    "snapshotPointBudget": 2000,
    "synth": dict(BENCH_SCRIPT["synth"]),
    "camera": {"position": [0, 1.4, -3.4], "focalLengthPx": 620,
               "imageWidth": 960, "imageHeight": 540, "mirror": True},
}

SERVE_CONFIG = {
    "source": {"type": "synthetic"},
    "seed": 7,
    "tickRate": 60,
    "scenePath": "courtyard.json",
    "listenAddress": "127.0.0.1:8787",
    "snapshotPointBudget": 2000,
}


def main() -> None:
    rng = np.random.default_rng(20240131)
    (ASSETS / "textures").mkdir(parents=True, exist_ok=True)
    (ASSETS / "sprites").mkdir(parents=True, exist_ok=True)
    (ASSETS / "fixtures").mkdir(parents=True, exist_ok=True)

    save_rgb(back_facade(rng), ASSETS / "textures" / "back.png")
    save_rgb(left_facade(rng), ASSETS / "textures" / "left.png")
    save_rgb(right_facade(rng), ASSETS / "textures" / "right.png")

    for name, fn in (("bowl", sprite_bowl), ("fish", sprite_fish),
                     ("lantern", sprite_lantern), ("fan", sprite_fan)):
        rgb, alpha = fn()
        save_rgba(rgb, alpha, ASSETS / "sprites" / f"{name}.png")

    for name, doc in (("courtyard.json", COURTYARD),
                      ("fixture_script.json", FIXTURE_SCRIPT),
                      ("bench_script.json", BENCH_SCRIPT),
                      ("replay.json", REPLAY_CONFIG),
                      ("bench.json", BENCH_CONFIG),
                      ("serve.json", SERVE_CONFIG)):
        path = ASSETS / name
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print("wrote", path)

    from painterly.cli import render_script
    from painterly.depth import write_recording

    frames = render_script(ASSETS / "fixture_script.json")
    recording = ASSETS / "fixtures" / "performer_160x120.pdr1"
    write_recording(recording, frames, fps=FIXTURE_SCRIPT["fps"])
    print(f"wrote {recording} ({len(frames)} frames)")


if __name__ == "__main__":
    main()
