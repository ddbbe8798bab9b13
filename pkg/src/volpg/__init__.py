"""Volumetric path tracer with path-graph radiance refinement."""

__version__ = "0.1.0"

from volpg.scenecore.types import (
    Camera,
    Emitter,
    Medium,
    PhaseHG,
    Scene,
    SceneError,
    Surface,
)
from volpg.harness.config import RenderConfig

__all__ = [
    "Camera",
    "Emitter",
    "Medium",
    "PhaseHG",
    "RenderConfig",
    "Scene",
    "SceneError",
    "Surface",
]
