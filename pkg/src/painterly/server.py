"""Session orchestration: the fixed-tick loop, wire protocol, and network boundary.

A ``Simulation`` owns all mutable state and advances it one tick at a time:
acquire a depth frame (recording, frame-paced by its fps and looping, or the
synthetic performer), filter to a body cloud, map to world space, detect
emitters, step particles, compose. Control messages are queued on arrival
and applied at the next tick boundary, so a session is a pure function of
(config, stamped control sequence).

``replay`` and ``bench`` run the same loop as fast as possible and headless;
``run_session`` paces it against the wall clock and streams snapshots to
websocket viewers with per-client drop-oldest backpressure.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import statistics
import struct
import time
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import particles as particles_mod
from .depth import (DepthStream, PerformerState, SynthConfig, open_recording,
                    synth_frame, SENSOR_MIN_MM, SENSOR_MAX_MM,
                    DEFAULT_STAGE_HALF_WIDTH_M)
from .embodiment import (EmitterParams, EmitterSet, FilterConfig, MappingConfig,
                         PointCloud, cloud_to_world, detect_emitters, downsample,
                         extract_point_cloud)
from .errors import BadConfig, MalformedControl
from .particles import ParticleSystemConfig, ParticleSystemState
from .render import Camera, RenderStyle, render_frame, write_image
from .scene import PainterlyScene, WorldState, compose, load_scene

MOVE_SLEW_M_PER_S = 2.0
JUMP_DURATION_S = 0.6
CLIENT_QUEUE_DEPTH = 8

_logger = logging.getLogger("painterly.server")


@dataclass(frozen=True)
class SessionConfig:
    source: str = "synthetic"                  # "synthetic" | "recording"
    recording_path: Path | None = None
    seed: int = 0
    tick_rate: float = 60.0
    filter: FilterConfig = field(default_factory=FilterConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    physics: ParticleSystemConfig = field(default_factory=ParticleSystemConfig)
    scene_path: Path = Path("courtyard.json")
    listen_address: str = "127.0.0.1:8787"
    snapshot_point_budget: int = 2000
    synth: SynthConfig = field(default_factory=SynthConfig)
    camera: Camera = field(default_factory=Camera)
    emitter_params: EmitterParams = field(default_factory=EmitterParams)

    def __post_init__(self) -> None:
        if self.tick_rate <= 0:
            raise BadConfig("tickRate must be positive")
        if self.snapshot_point_budget < 1:
            raise BadConfig("snapshotPointBudget must be >= 1")
        if self.source not in ("synthetic", "recording"):
            raise BadConfig("source must be 'synthetic' or 'recording'")
        if self.source == "recording" and self.recording_path is None:
            raise BadConfig("recording source requires a path")
        if not 0 <= self.seed < 2 ** 64:
            raise BadConfig("seed must be a u64")


def _build_section(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise BadConfig(f"{where}: expected an object")
    known = {f.name for f in dataclass_fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = _camel_to_snake(key)
        if name not in known:
            raise BadConfig(f"{where}: unknown key '{key}'")
        if name == "origin_offset" or name == "position":
            value = tuple(float(v) for v in value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise BadConfig(f"{where}: {exc}") from exc


def _camel_to_snake(name: str) -> str:
    out = []
    for ch in name:
        if ch.isupper():
            out.append("_")
            out.append(ch.lower())
        else:
            out.append(ch)
    return "".join(out)


_TOP_LEVEL_KEYS = {"source", "seed", "tickRate", "filter", "mapping", "physics",
                   "scenePath", "listenAddress", "snapshotPointBudget", "synth",
                   "camera", "emitterParams"}


def load_config(path: str | Path, **overrides) -> SessionConfig:
    """Parse a session config file; keyword overrides win over file values."""
    path = Path(path)
    if not path.is_file():
        raise BadConfig(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BadConfig(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise BadConfig("config must be a JSON object")
    unknown = raw.keys() - _TOP_LEVEL_KEYS
    if unknown:
        raise BadConfig(f"unknown config key(s): {sorted(unknown)}")

    base = path.parent
    kwargs: dict = {}
    source = raw.get("source", {"type": "synthetic"})
    if not isinstance(source, dict) or "type" not in source:
        raise BadConfig("source: expected {\"type\": ...}")
    kwargs["source"] = source["type"]
    if source["type"] == "recording":
        if "path" not in source:
            raise BadConfig("source: recording requires a path")
        kwargs["recording_path"] = base / source["path"]
    elif set(source) - {"type"}:
        raise BadConfig("source: unknown key(s) for synthetic source")

    if "seed" in raw:
        kwargs["seed"] = int(raw["seed"])
    if "tickRate" in raw:
        kwargs["tick_rate"] = float(raw["tickRate"])
    if "snapshotPointBudget" in raw:
        kwargs["snapshot_point_budget"] = int(raw["snapshotPointBudget"])
    if "scenePath" in raw:
        kwargs["scene_path"] = base / raw["scenePath"]
    if "listenAddress" in raw:
        kwargs["listen_address"] = str(raw["listenAddress"])
    if "filter" in raw:
        kwargs["filter"] = _build_section(FilterConfig, raw["filter"], "filter")
    if "mapping" in raw:
        kwargs["mapping"] = _build_section(MappingConfig, raw["mapping"], "mapping")
    if "physics" in raw:
        kwargs["physics"] = _build_section(ParticleSystemConfig, raw["physics"], "physics")
    if "synth" in raw:
        kwargs["synth"] = _build_section(SynthConfig, raw["synth"], "synth")
    if "camera" in raw:
        kwargs["camera"] = _build_section(Camera, raw["camera"], "camera")
    if "emitterParams" in raw:
        kwargs["emitter_params"] = _build_section(EmitterParams, raw["emitterParams"], "emitterParams")

    kwargs.update(overrides)
    return SessionConfig(**kwargs)


def parse_control(message: str | dict) -> dict:
    """Validate a control message, returning its typed fields.

    Raises MalformedControl for anything that is not a well-typed control
    object; unknown keys are rejected so typos fail loudly.
    """
    if isinstance(message, str):
        try:
            message = json.loads(message)
        except json.JSONDecodeError as exc:
            raise MalformedControl(f"not valid JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise MalformedControl("control must be a JSON object")
    if message.get("type") != "control":
        raise MalformedControl("expected \"type\": \"control\"")
    unknown = message.keys() - {"type", "move", "jump", "leftHand", "rightHand"}
    if unknown:
        raise MalformedControl(f"unknown control key(s): {sorted(unknown)}")
    out: dict = {}
    if "move" in message:
        move = message["move"]
        if not isinstance(move, dict) or (move.keys() - {"x", "depth"}):
            raise MalformedControl("move: expected {\"x\"?: m, \"depth\"?: mm}")
        for key in ("x", "depth"):
            if key in move:
                v = move[key]
                if isinstance(v, bool) or not isinstance(v, (int, float)) \
                        or not math.isfinite(v):
                    raise MalformedControl(f"move.{key}: expected a finite number")
                out[key] = float(v)
    for key in ("jump", "leftHand", "rightHand"):
        if key in message:
            if not isinstance(message[key], bool):
                raise MalformedControl(f"{key}: expected a boolean")
            out[key] = message[key]
    return out


def _round4(value: float) -> float:
    r = round(float(value), 4)
    return 0.0 if r == 0 else r


def _vec(values) -> list[float]:
    return [_round4(v) for v in values]


def encode_state(world: WorldState, budget: int,
                 performer: PerformerState | None = None) -> str:
    """Encode a WorldState as the wire snapshot message.

    Numbers are rounded to 4 decimals and field order is fixed, so equal
    states encode to equal bytes. The cloud is capped at ``budget`` points.
    """
    cloud = downsample(world.cloud, budget)
    doc: dict = {
        "type": "state",
        "tick": world.tick,
        "cloud": [_vec(p) for p in cloud.points],
        "particles": [
            {"position": _vec(p.position), "kind": p.kind,
             "lifespan": _round4(p.lifespan)}
            for p in world.particles
        ],
        "emitters": {
            "head": _vec(world.emitters.head) if world.emitters.head else None,
            "hands": [_vec(h) for h in world.emitters.hands],
        },
    }
    if performer is not None:
        doc["performer"] = {
            "x": _round4(performer.x),
            "depth": _round4(performer.depth),
            "jumpPhase": _round4(performer.jump_phase),
            "leftHand": performer.left_hand_raised,
            "rightHand": performer.right_hand_raised,
        }
    return json.dumps(doc, separators=(",", ":"))


class Simulation:
    """Deterministic single-writer session core; one instance per session."""

    def __init__(self, cfg: SessionConfig, scene: PainterlyScene | None = None):
        self.cfg = cfg
        self.scene = scene if scene is not None else load_scene(cfg.scene_path)
        self.tick = 0
        self.performer = PerformerState()
        self._target_x = self.performer.x
        self._target_depth = self.performer.depth
        self._jumping = False
        self._inbox: list[dict] = []
        self.particle_state: ParticleSystemState = particles_mod.make_state(
            cfg.seed, cfg.physics)
        self.stream: DepthStream | None = None
        if cfg.source == "recording":
            self.stream = open_recording(cfg.recording_path)
        self.last_timings: dict[str, float] = {}
        self.last_world: WorldState | None = None

    # -- control -----------------------------------------------------------

    def apply_control(self, message: str | dict) -> dict:
        """Queue a control message for the next tick and return its ack."""
        try:
            control = parse_control(message)
        except MalformedControl as exc:
            return {"type": "ack", "status": "error", "detail": str(exc)}
        if self.cfg.source != "synthetic":
            return {"type": "ack", "status": "ignored"}
        self._inbox.append(control)
        return {"type": "ack", "status": "ok"}

    def _drain_controls(self) -> None:
        for control in self._inbox:
            if "x" in control:
                self._target_x = min(max(control["x"],
                                         -DEFAULT_STAGE_HALF_WIDTH_M),
                                     DEFAULT_STAGE_HALF_WIDTH_M)
            if "depth" in control:
                self._target_depth = min(max(control["depth"], SENSOR_MIN_MM),
                                         SENSOR_MAX_MM)
            if control.get("jump") and not self._jumping:
                self._jumping = True
                self.performer.jump_phase = 0.0
            if "leftHand" in control:
                self.performer.left_hand_raised = control["leftHand"]
            if "rightHand" in control:
                self.performer.right_hand_raised = control["rightHand"]
        self._inbox.clear()

    def _advance_performer(self) -> None:
        dt = 1.0 / self.cfg.tick_rate
        max_dx = MOVE_SLEW_M_PER_S * dt
        dx = self._target_x - self.performer.x
        self.performer.x += min(max(dx, -max_dx), max_dx)
        max_dd = MOVE_SLEW_M_PER_S * 1000.0 * dt
        dd = self._target_depth - self.performer.depth
        self.performer.depth += min(max(dd, -max_dd), max_dd)
        if self._jumping:
            self.performer.jump_phase += dt / JUMP_DURATION_S
            if self.performer.jump_phase >= 1.0:
                self.performer.jump_phase = 0.0
                self._jumping = False

    # -- frame acquisition --------------------------------------------------

    def _acquire_frame(self):
        if self.stream is not None:
            index = int(self.tick * self.stream.fps // self.cfg.tick_rate)
            return self.stream.frame_at(index % self.stream.frame_count)
        return synth_frame(self.performer, self.cfg.synth,
                           t=self.tick / self.cfg.tick_rate)

    # -- the tick ------------------------------------------------------------

    def step(self) -> WorldState:
        """Advance one tick and return the composed world state."""
        timings: dict[str, float] = {}
        t0 = time.perf_counter()
        self._drain_controls()
        if self.cfg.source == "synthetic":
            self._advance_performer()
        frame = self._acquire_frame()
        t1 = time.perf_counter()
        timings["acquire"] = t1 - t0

        image_cloud = extract_point_cloud(frame, self.cfg.filter)
        t2 = time.perf_counter()
        timings["extract"] = t2 - t1

        budgeted = downsample(image_cloud, self.cfg.snapshot_point_budget)
        world_cloud = cloud_to_world(budgeted, self.cfg.mapping)
        t3 = time.perf_counter()
        timings["map"] = t3 - t2

        emitters = detect_emitters(world_cloud, self.cfg.emitter_params)
        t4 = time.perf_counter()
        timings["detect"] = t4 - t3

        sources = self._emitter_sources(emitters, world_cloud)
        particles_mod.step(self.particle_state, sources, self.scene.ground_y,
                           self.cfg.physics, self.scene.palette_kinds())
        t5 = time.perf_counter()
        timings["step"] = t5 - t4

        world = compose(self.scene, world_cloud, self.particle_state.particles,
                        emitters, self.tick)
        t6 = time.perf_counter()
        timings["compose"] = t6 - t5

        self.tick += 1
        self.last_timings = timings
        self.last_world = world
        return world

    def _emitter_sources(self, emitters: EmitterSet, cloud: PointCloud):
        if self.cfg.physics.emitter_source == "wholeCloud" or emitters.fallback_all:
            return [tuple(p) for p in cloud.points]
        return emitters.source_points()

    def encode_last(self) -> str:
        performer = self.performer if self.cfg.source == "synthetic" else None
        return encode_state(self.last_world, self.cfg.snapshot_point_budget,
                            performer)

    def fingerprint(self) -> str:
        """Hash of the full mutable state; equal only for bit-equal sessions."""
        h = hashlib.sha256()
        h.update(struct.pack("<q", self.tick))
        h.update(struct.pack("<3d??", self.performer.x, self.performer.depth,
                             self.performer.jump_phase,
                             self.performer.left_hand_raised,
                             self.performer.right_hand_raised))
        h.update(particles_mod.state_hash(self.particle_state).encode())
        return h.hexdigest()


# -- headless runs -----------------------------------------------------------


@dataclass
class ReplayResult:
    ticks: int
    state_hash: str
    frame_paths: list[Path]
    metrics: dict


def _aggregate_stage_times(samples: dict[str, list[float]]) -> dict:
    out = {}
    for stage, times in samples.items():
        ms = [t * 1000.0 for t in times]
        out[stage] = {
            "medianMs": round(statistics.median(ms), 3),
            "p99Ms": round(float(np.percentile(ms, 99)), 3),
        }
    return out


def replay(cfg: SessionConfig, ticks: int, out_dir: str | Path,
           style: RenderStyle = RenderStyle()) -> ReplayResult:
    """Headless deterministic run: render every tick to PPM and record metrics."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = Simulation(cfg)
    samples: dict[str, list[float]] = {}
    frame_paths: list[Path] = []
    max_particles = 0
    for _ in range(ticks):
        world = sim.step()
        t0 = time.perf_counter()
        image = render_frame(world, cfg.camera, style)
        sim.last_timings["render"] = time.perf_counter() - t0
        path = out_dir / f"frame_{world.tick:06d}.ppm"
        write_image(image, path, "PPM")
        frame_paths.append(path)
        max_particles = max(max_particles, len(world.particles))
        for stage, t in sim.last_timings.items():
            samples.setdefault(stage, []).append(t)
    state_hash = sim.fingerprint()
    metrics = {
        "ticks": ticks,
        "seed": cfg.seed,
        "stateHash": state_hash,
        "particles": {
            "final": len(sim.particle_state.particles),
            "max": max_particles,
        },
        "stages": _aggregate_stage_times(samples),
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    (out_dir / "state_hash.txt").write_text(state_hash + "\n")
    return ReplayResult(ticks=ticks, state_hash=state_hash,
                        frame_paths=frame_paths, metrics=metrics)


def bench(cfg: SessionConfig, ticks: int = 300,
          style: RenderStyle = RenderStyle()) -> dict:
    """Time the full per-tick pipeline (including render and encode) headless."""
    sim = Simulation(cfg)
    samples: dict[str, list[float]] = {}
    totals: list[float] = []
    for _ in range(ticks):
        t_start = time.perf_counter()
        world = sim.step()
        t0 = time.perf_counter()
        render_frame(world, cfg.camera, style)
        t1 = time.perf_counter()
        sim.encode_last()
        t2 = time.perf_counter()
        sim.last_timings["render"] = t1 - t0
        sim.last_timings["encode"] = t2 - t1
        totals.append(t2 - t_start)
        for stage, t in sim.last_timings.items():
            samples.setdefault(stage, []).append(t)
    samples["total"] = totals
    return {
        "ticks": ticks,
        "stages": _aggregate_stage_times(samples),
    }


# -- network boundary ---------------------------------------------------------


def hello_message(sim: Simulation) -> str:
    cam = sim.cfg.camera
    doc = {
        "type": "hello",
        "scene": sim.scene.descriptor,
        "tickRate": sim.cfg.tick_rate,
        "mode": sim.cfg.source,
        "camera": {
            "position": list(cam.position),
            "focalLengthPx": cam.focal_length_px,
            "imageWidth": cam.image_width,
            "imageHeight": cam.image_height,
            "mirror": cam.mirror,
        },
    }
    return json.dumps(doc, separators=(",", ":"))


class SnapshotQueue:
    """Per-client buffer: keeps at most the newest CLIENT_QUEUE_DEPTH snapshots."""

    def __init__(self, depth: int = CLIENT_QUEUE_DEPTH):
        import asyncio

        self.depth = depth
        self.dropped = 0
        self._queue: "asyncio.Queue[str]" = asyncio.Queue(maxsize=depth)

    def offer(self, message: str) -> None:
        while self._queue.full():
            self._queue.get_nowait()
            self.dropped += 1
        self._queue.put_nowait(message)

    async def take(self) -> str:
        return await self._queue.get()


def build_app(cfg: SessionConfig, static_dir: str | Path | None = None):
    """FastAPI app hosting /ws plus optional viewer static files under /."""
    import asyncio
    from contextlib import asynccontextmanager

    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    sim = Simulation(cfg)
    queues: set[SnapshotQueue] = set()

    async def tick_loop() -> None:
        period = 1.0 / cfg.tick_rate
        loop = asyncio.get_running_loop()
        next_deadline = loop.time() + period
        while True:
            sim.step()
            message = sim.encode_last()
            for q in list(queues):
                q.offer(message)
            await asyncio.sleep(max(0.0, next_deadline - loop.time()))
            next_deadline += period

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(tick_loop())
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.simulation = sim

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        send_lock = asyncio.Lock()
        queue = SnapshotQueue()
        queues.add(queue)

        async def pump_snapshots() -> None:
            while True:
                message = await queue.take()
                async with send_lock:
                    await websocket.send_text(message)

        async def pump_controls() -> None:
            while True:
                text = await websocket.receive_text()
                ack = sim.apply_control(text)
                async with send_lock:
                    await websocket.send_text(json.dumps(ack, separators=(",", ":")))

        try:
            async with send_lock:
                await websocket.send_text(hello_message(sim))
            pumps = [asyncio.create_task(pump_snapshots()),
                     asyncio.create_task(pump_controls())]
            done, pending = await asyncio.wait(pumps,
                                               return_when=asyncio.FIRST_EXCEPTION)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    _logger.info("viewer connection dropped: %s", exc)
        except WebSocketDisconnect:
            pass
        finally:
            queues.discard(queue)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="viewer")

    return app, sim


def run_session(cfg: SessionConfig, static_dir: str | Path | None = None) -> None:
    """Run a live session until interrupted (the CLI `serve` entry point)."""
    import uvicorn

    app, _ = build_app(cfg, static_dir=static_dir)
    host, _, port = cfg.listen_address.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8787),
                log_level="warning")
