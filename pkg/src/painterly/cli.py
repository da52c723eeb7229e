"""Command-line entry points for running, replaying, and benchmarking sessions."""

from __future__ import annotations

import json
import math
from pathlib import Path

import click

from ._log import configure_logging
from .depth import DepthFrame, PerformerState, SynthConfig, open_recording, \
    synth_frame, write_recording
from .errors import BadConfig
from .render import Camera, RenderStyle, render_frame, write_image
from .scene import load_scene, compose
from .embodiment import PointCloud, EmitterSet
from .server import SessionConfig, bench as bench_run, load_config, replay, \
    run_session, _build_section


@click.group()
def main() -> None:
    """Painterly reality engine: live painting sessions from depth streams."""
    configure_logging()


def _session_config(config: str | None, **overrides) -> SessionConfig:
    if config is not None:
        return load_config(config, **{k: v for k, v in overrides.items()
                                      if v is not None})
    return SessionConfig(**{k: v for k, v in overrides.items() if v is not None})


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True),
              help="Session config JSON.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--listen", default=None, help="Override host:port to listen on.")
@click.option("--static", type=click.Path(), default=None,
              help="Directory of viewer static files served under /.")
def serve(config: str, seed: int | None, listen: str | None,
          static: str | None) -> None:
    """Run a live session with the websocket viewer endpoint."""
    overrides: dict = {}
    if seed is not None:
        overrides["seed"] = seed
    if listen is not None:
        overrides["listen_address"] = listen
    cfg = load_config(config, **overrides)
    static_dir = Path(static) if static else None
    click.echo(f"listening on {cfg.listen_address} (mode: {cfg.source})")
    run_session(cfg, static_dir=static_dir)


@main.command("replay")
@click.option("--recording", required=True, type=click.Path(exists=True),
              help="PDR1 recording to replay.")
@click.option("--scene", required=True, type=click.Path(exists=True),
              help="Scene descriptor JSON.")
@click.option("--out", required=True, type=click.Path(),
              help="Directory for PPM frames, metrics.json, state_hash.txt.")
@click.option("--ticks", type=int, default=None,
              help="Tick count (default: one full loop of the recording).")
@click.option("--seed", type=int, default=None, help="RNG seed (default: config value or 0).")
@click.option("--config", type=click.Path(exists=True), default=None,
              help="Optional session config supplying mapping/camera/etc.")
def replay_cmd(recording: str, scene: str, out: str, ticks: int | None,
               seed: int, config: str | None) -> None:
    """Deterministic headless run: recording in, frame sequence out."""
    cfg = _session_config(config, source="recording",
                          recording_path=Path(recording),
                          scene_path=Path(scene), seed=seed)
    if ticks is None:
        stream = open_recording(cfg.recording_path)
        ticks = math.ceil(stream.frame_count * cfg.tick_rate / stream.fps)
    result = replay(cfg, ticks=ticks, out_dir=out)
    click.echo(f"{result.ticks} ticks, {len(result.frame_paths)} frames -> {out}")
    click.echo(f"state hash: {result.state_hash}")


@main.command("synth-record")
@click.option("--out", required=True, type=click.Path(),
              help="Output PDR1 path.")
@click.option("--script", required=True, type=click.Path(exists=True),
              help="Performer script JSON (fps, durationSeconds, synth, keyframes).")
def synth_record(out: str, script: str) -> None:
    """Generate a PDR1 recording from a scripted synthetic performer path."""
    frames = render_script(Path(script))
    fps = json.loads(Path(script).read_text())["fps"]
    write_recording(out, frames, fps=fps)
    click.echo(f"wrote {len(frames)} frames at {fps} fps -> {out}")


@main.command()
@click.option("--scene", required=True, type=click.Path(exists=True),
              help="Scene descriptor JSON.")
@click.option("--out", required=True, type=click.Path(), help="Output PPM path.")
def golden(scene: str, out: str) -> None:
    """Render the scene-only reference image with the default camera."""
    loaded = load_scene(scene)
    empty_cloud = PointCloud(points=[], frame_width=1, frame_height=1,
                             space="world")
    world = compose(loaded, empty_cloud, [], EmitterSet(), tick=0)
    image = render_frame(world, Camera(), RenderStyle())
    write_image(image, out, "PPM")
    click.echo(f"golden -> {out}")


@main.command()
@click.option("--recording", required=True, type=click.Path(exists=True),
              help="PDR1 recording to drive the pipeline.")
@click.option("--scene", required=True, type=click.Path(exists=True),
              help="Scene descriptor JSON.")
@click.option("--ticks", type=int, default=300, help="Ticks to measure.")
@click.option("--config", type=click.Path(exists=True), default=None,
              help="Optional session config supplying mapping/camera/etc.")
def bench(recording: str, scene: str, ticks: int, config: str | None) -> None:
    """Report per-stage median/p99 timings over the recording."""
    cfg = _session_config(config, source="recording",
                          recording_path=Path(recording),
                          scene_path=Path(scene))
    report = bench_run(cfg, ticks=ticks)
    stages = report["stages"]
    width = max(len(s) for s in stages)
    click.echo(f"{'stage'.ljust(width)}  median ms   p99 ms")
    for stage, stats in stages.items():
        click.echo(f"{stage.ljust(width)}  {stats['medianMs']:9.3f} {stats['p99Ms']:8.3f}")


# -- performer scripts ---------------------------------------------------------


def render_script(script_path: Path) -> list[DepthFrame]:
    """Expand a performer script into synthetic depth frames."""
    raw = json.loads(script_path.read_text())
    unknown = raw.keys() - {"fps", "durationSeconds", "synth", "keyframes"}
    if unknown:
        raise BadConfig(f"script: unknown key(s) {sorted(unknown)}")
    for key in ("fps", "durationSeconds", "keyframes"):
        if key not in raw:
            raise BadConfig(f"script: missing key '{key}'")
    fps = float(raw["fps"])
    duration = float(raw["durationSeconds"])
    if fps <= 0 or duration <= 0:
        raise BadConfig("script: fps and durationSeconds must be positive")
    synth_cfg = _build_section(SynthConfig, raw.get("synth", {}), "script.synth")
    keyframes = raw["keyframes"]
    if not isinstance(keyframes, list) or not keyframes:
        raise BadConfig("script: keyframes must be a non-empty array")
    keyframes = sorted(keyframes, key=lambda k: k["t"])

    frames = []
    count = int(round(fps * duration))
    for i in range(count):
        t = i / fps
        state = _interpolate(keyframes, t)
        frames.append(synth_frame(state, synth_cfg, t=t))
    return frames


def _interpolate(keyframes: list[dict], t: float) -> PerformerState:
    prev = keyframes[0]
    nxt = keyframes[-1]
    for kf in keyframes:
        if kf["t"] <= t:
            prev = kf
        else:
            nxt = kf
            break
    else:
        nxt = prev
    span = nxt["t"] - prev["t"]
    blend = 0.0 if span <= 0 else min(max((t - prev["t"]) / span, 0.0), 1.0)

    def lerp(key: str, default: float) -> float:
        a = float(prev.get(key, default))
        b = float(nxt.get(key, default))
        return a + (b - a) * blend

    return PerformerState(
        x=lerp("x", 0.0),
        depth=lerp("depth", 2000.0),
        jump_phase=lerp("jumpPhase", 0.0),
        left_hand_raised=bool(prev.get("leftHand", False)),
        right_hand_raised=bool(prev.get("rightHand", False)),
    )


if __name__ == "__main__":
    main()
