from volpg.harness.config import RenderConfig
from volpg.harness.metrics import compute_mse
from volpg.harness.pfm import read_pfm, write_pfm
from volpg.harness.scenefile import parse_scene, parse_scene_text, serialize_scene

__all__ = [
    "RenderConfig",
    "compute_mse",
    "read_pfm",
    "write_pfm",
    "parse_scene",
    "parse_scene_text",
    "serialize_scene",
]
