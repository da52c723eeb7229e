"""Painterly reality engine.

Turns depth frames into a body point cloud embedded in a painterly 3D
courtyard, spawns everyday-object particles from the head and raised hands,
and rasterizes the composite as a mirrored live painting. Fully
deterministic at a fixed timestep: same seed and inputs, same bytes out.
"""

from importlib import resources
from pathlib import Path

from .depth import (DepthFrame, DepthStream, END_OF_STREAM, EndOfStream,
                    PerformerState, SynthConfig, next_frame, open_recording,
                    parse_pgm, synth_frame, write_recording)
from .embodiment import (EmitterParams, EmitterSet, FilterConfig, MappingConfig,
                         PointCloud, cloud_to_world, detect_emitters, downsample,
                         extract_point_cloud, from_world, to_world)
from .particles import (Particle, ParticleSystemConfig, ParticleSystemState,
                        emit_step, integrate, make_state, sample_object_kind,
                        state_hash, step)
from .render import Camera, Image, RenderStyle, project, read_ppm, render_frame, \
    write_image
from .scene import (Bounds, PainterlyScene, WorldState, clamp_to_bounds, compose,
                    load_scene)
from .server import (ReplayResult, SessionConfig, Simulation, bench, build_app,
                     encode_state, load_config, replay, run_session)

__version__ = "0.1.0"


def asset_path(*parts: str) -> Path:
    """Path to a bundled asset, e.g. asset_path('courtyard.json')."""
    return Path(resources.files("painterly") / "assets").joinpath(*parts)
