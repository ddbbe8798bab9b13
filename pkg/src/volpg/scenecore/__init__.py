from volpg.scenecore.types import (
    Camera,
    Emitter,
    Medium,
    PhaseHG,
    Scene,
    SceneError,
    Surface,
    as_spectrum,
)
from volpg.scenecore.phase import eval_phase, sample_phase
from volpg.scenecore.medium import sample_distance, transmittance
from volpg.scenecore.emitters import pdf_emitter_dir, sample_emitter
from volpg.scenecore.geometry import intersect
from volpg.scenecore.volgrid import read_volume_grid, write_volume_grid

__all__ = [
    "Camera",
    "Emitter",
    "Medium",
    "PhaseHG",
    "Scene",
    "SceneError",
    "Surface",
    "as_spectrum",
    "eval_phase",
    "sample_phase",
    "sample_distance",
    "transmittance",
    "sample_emitter",
    "pdf_emitter_dir",
    "intersect",
    "read_volume_grid",
    "write_volume_grid",
]
