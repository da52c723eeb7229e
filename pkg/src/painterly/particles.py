"""Buffer-gated particle emitter and ballistic physics for painterly objects.

Emission follows a per-point countdown: visiting a source point either spawns
a particle (only when the live list is below its cap of 50 and the countdown
buffer has reached 0, which also resets the buffer to 50) or decrements the
buffer. Expired particles are purged once per tick, after integration, so a
slot freed by expiry becomes spawnable on the next tick.

Physics is semi-implicit Euler at a fixed timestep: gravity pulls velocity
down, position follows velocity, and crossing the ground flips the vertical
speed scaled by restitution. Every particle carries a lifespan that decreases
by dt per tick; at or below zero it is removed.
"""

from __future__ import annotations

import copy
import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPalette


@dataclass(frozen=True)
class ParticleSystemConfig:
    particle_num: int = 50
    buffer_init: int = 50
    launch_speed: float = 3.0          # m/s upward
    horizontal_jitter: float = 0.8     # m/s max absolute, x and z
    gravity: float = 9.81              # m/s^2 downward
    restitution: float = 1.0
    lifespan_init: float = 3.0         # seconds
    dt: float = 1.0 / 60.0
    emitter_source: str = "emitters"   # "emitters" | "wholeCloud"

    def __post_init__(self) -> None:
        if self.particle_num < 1:
            raise ValueError("particle_num must be >= 1")
        if self.buffer_init < 0:
            raise ValueError("buffer_init must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")
        if self.emitter_source not in ("emitters", "wholeCloud"):
            raise ValueError("emitter_source must be 'emitters' or 'wholeCloud'")


@dataclass
class Particle:
    position: list[float]   # [x, y, z] meters
    velocity: list[float]   # [vx, vy, vz] m/s
    lifespan: float         # seconds remaining
    kind: str

    def copy(self) -> "Particle":
        return Particle(list(self.position), list(self.velocity),
                        self.lifespan, self.kind)


class ParticleSystemState:
    """Live particle list, spawn countdown buffer, and an explicit RNG.

    The RNG is a seeded numpy PCG64 generator carried in the state; nothing
    in this module touches ambient randomness, so equal seeds and inputs
    replay bit-identically.
    """

    def __init__(self, seed: int = 0, buffer_init: int = 50):
        self.particles: list[Particle] = []
        self.buffer: int = buffer_init
        self.rng = np.random.Generator(np.random.PCG64(seed))

    def snapshot(self) -> list[Particle]:
        """Immutable-by-copy view of the live particles for render/stream."""
        return [p.copy() for p in self.particles]

    def clone(self) -> "ParticleSystemState":
        other = ParticleSystemState.__new__(ParticleSystemState)
        other.particles = [p.copy() for p in self.particles]
        other.buffer = self.buffer
        other.rng = np.random.Generator(np.random.PCG64())
        other.rng.bit_generator.state = copy.deepcopy(self.rng.bit_generator.state)
        return other


def make_state(seed: int, cfg: ParticleSystemConfig) -> ParticleSystemState:
    return ParticleSystemState(seed=seed, buffer_init=cfg.buffer_init)


def sample_object_kind(rng: np.random.Generator, palette: list[str]) -> str:
    """Uniform draw from the palette; advances the generator deterministically."""
    if not palette:
        raise EmptyPalette("cannot sample an object kind from an empty palette")
    return palette[int(rng.integers(len(palette)))]


def emit_step(state: ParticleSystemState,
              source_points: list[tuple[float, float, float]],
              cfg: ParticleSystemConfig,
              palette: list[str]) -> ParticleSystemState:
    """Visit source points in order, spawning or counting down at each.

    A spawn appends a particle at the point with upward launch velocity plus
    horizontal jitter drawn from the state's RNG, resets the buffer, and
    never exceeds the live cap. The buffer decrement floors at 0 so that a
    full list cannot push it negative and deadlock future spawns. Purging of
    expired particles belongs to ``integrate``, not here.
    """
    if source_points and not palette:
        raise EmptyPalette("cannot spawn particles without a palette")
    for point in source_points:
        if len(state.particles) < cfg.particle_num and state.buffer == 0:
            jitter_x = float(state.rng.uniform(-cfg.horizontal_jitter,
                                               cfg.horizontal_jitter))
            jitter_z = float(state.rng.uniform(-cfg.horizontal_jitter,
                                               cfg.horizontal_jitter))
            kind = sample_object_kind(state.rng, palette)
            state.particles.append(Particle(
                position=[float(point[0]), float(point[1]), float(point[2])],
                velocity=[jitter_x, cfg.launch_speed, jitter_z],
                lifespan=cfg.lifespan_init,
                kind=kind,
            ))
            state.buffer = cfg.buffer_init
        else:
            state.buffer = max(0, state.buffer - 1)
    return state


def integrate(state: ParticleSystemState, ground_y: float,
              cfg: ParticleSystemConfig) -> ParticleSystemState:
    """One fixed timestep of physics, then purge expired particles in order."""
    g_dt = cfg.gravity * cfg.dt
    for p in state.particles:
        p.velocity[1] -= g_dt
        p.position[0] += p.velocity[0] * cfg.dt
        p.position[1] += p.velocity[1] * cfg.dt
        p.position[2] += p.velocity[2] * cfg.dt
        if p.position[1] < ground_y:
            p.position[1] = ground_y
            p.velocity[1] = -cfg.restitution * p.velocity[1]
        p.lifespan -= cfg.dt
    state.particles = [p for p in state.particles if p.lifespan > 0]
    return state


def step(state: ParticleSystemState,
         source_points: list[tuple[float, float, float]],
         ground_y: float,
         cfg: ParticleSystemConfig,
         palette: list[str]) -> ParticleSystemState:
    """The single per-tick mutation path: emit, then integrate and purge."""
    emit_step(state, source_points, cfg, palette)
    return integrate(state, ground_y, cfg)


def state_hash(state: ParticleSystemState) -> str:
    """SHA-256 over exact float bits of the state; equal hashes mean equal states."""
    h = hashlib.sha256()
    h.update(struct.pack("<q", state.buffer))
    for p in state.particles:
        h.update(struct.pack("<3d3dd", *p.position, *p.velocity, p.lifespan))
        h.update(p.kind.encode())
        h.update(b"\x00")
    h.update(repr(state.rng.bit_generator.state).encode())
    return h.hexdigest()
