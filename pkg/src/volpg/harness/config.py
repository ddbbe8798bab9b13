"""Render configuration shared by the CLI, experiments, and tests."""

from dataclasses import dataclass
from typing import Optional


@dataclass
class RenderConfig:
    mode: str = "pt"  # pt | pg | reference
    spp: int = 1
    seed: int = 0
    cluster_size: int = 32
    iterations: int = 10
    tol: float = 1e-3
    max_depth: int = 64
    rr_start: int = 8
    rr_floor: float = 0.05
    extra_direct_samples: int = 0
    aggregate_direct: bool = False
    dump_records: Optional[str] = None
    residual_csv: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.mode not in ("pt", "pg", "reference"):
            raise ValueError(f"unknown render mode {self.mode!r}")
        if self.spp < 1:
            raise ValueError("spp must be >= 1")
        if self.cluster_size < 1:
            raise ValueError("cluster_size must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not (0.0 < self.rr_floor <= 1.0):
            raise ValueError("rr_floor must lie in (0, 1]")
