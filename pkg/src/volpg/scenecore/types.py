"""Scene description types and validation.

Scenes are immutable after load; all sampling state lives in the caller's
rng streams. Spectral quantities are RGB triples stored as plain tuples on
the dataclasses (exact round-trip through the text format) and converted
to float64 arrays at the flattening step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class SceneError(ValueError):
    """Raised when a scene violates a structural invariant."""


def as_spectrum(value) -> np.ndarray:
    """Coerce to a non-negative finite RGB float64 triple."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise SceneError(f"spectrum must have 3 channels, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise SceneError(f"spectrum channels must be finite and >= 0, got {arr}")
    return arr


def _vec3(value) -> tuple[float, float, float]:
    x, y, z = (float(v) for v in value)
    return (x, y, z)


@dataclass(frozen=True)
class PhaseHG:
    """Henyey-Greenstein phase function; g=0 degenerates to isotropic."""

    g: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.g < 1.0):
            raise SceneError(f"phase g must lie in (-1, 1), got {self.g}")


@dataclass
class Medium:
    """Participating medium: homogeneous or voxel-grid heterogeneous.

    Grid media scale the base coefficients by density(x) * density_scale
    with nearest-voxel lookup, which keeps the stored majorant an exact
    bound per voxel.
    """

    kind: str  # "homogeneous" | "grid"
    sigma_t: tuple[float, float, float]
    sigma_s: tuple[float, float, float]
    phase_g: float = 0.0
    bounds: tuple[float, float, float, float, float, float] = (0, 0, 0, 1, 1, 1)
    name: str = "medium"
    # grid only
    density: Optional[np.ndarray] = field(default=None, repr=False)
    density_scale: float = 1.0
    density_file: str = ""

    def __post_init__(self):
        if self.kind not in ("homogeneous", "grid"):
            raise SceneError(f"medium '{self.name}': unknown kind {self.kind!r}")
        st = as_spectrum(self.sigma_t)
        ss = as_spectrum(self.sigma_s)
        if np.any(ss > st + 1e-12):
            raise SceneError(
                f"medium '{self.name}': sigma_s must be <= sigma_t channel-wise "
                f"(got sigma_s={self.sigma_s}, sigma_t={self.sigma_t})"
            )
        if not (-1.0 < self.phase_g < 1.0):
            raise SceneError(f"medium '{self.name}': phase g must lie in (-1, 1)")
        lo = self.bounds[:3]
        hi = self.bounds[3:]
        if any(l >= h for l, h in zip(lo, hi)):
            raise SceneError(f"medium '{self.name}': degenerate bounds {self.bounds}")
        if self.kind == "grid":
            if self.density is None:
                raise SceneError(f"medium '{self.name}': grid medium needs a density volume")
            d = np.asarray(self.density, dtype=np.float32)
            if d.ndim != 3:
                raise SceneError(f"medium '{self.name}': density must be a 3D array")
            if not np.all(np.isfinite(d)) or d.min() < 0.0:
                raise SceneError(f"medium '{self.name}': density values must be finite and >= 0")
            if self.density_scale < 0.0:
                raise SceneError(f"medium '{self.name}': density_scale must be >= 0")
            object.__setattr__(self, "density", d)

    @property
    def majorant(self) -> float:
        """Upper bound on sigma_t at any point: max voxel x scale x max channel."""
        smax = float(max(self.sigma_t))
        if self.kind == "homogeneous":
            return smax
        return float(self.density.max()) * self.density_scale * smax

    def __eq__(self, other):
        if not isinstance(other, Medium):
            return NotImplemented
        same = (
            self.kind == other.kind
            and self.sigma_t == other.sigma_t
            and self.sigma_s == other.sigma_s
            and self.phase_g == other.phase_g
            and self.bounds == other.bounds
            and self.name == other.name
            and self.density_scale == other.density_scale
            and self.density_file == other.density_file
        )
        if not same:
            return False
        if self.density is None or other.density is None:
            return self.density is other.density
        return self.density.shape == other.density.shape and bool(
            np.array_equal(self.density, other.density)
        )


@dataclass(frozen=True)
class Emitter:
    """Light source: point (intensity W/sr), area (radiance, geometry from
    its referencing quad surface), or directional (irradiance, light travels
    along `direction`)."""

    kind: str  # "point" | "area" | "directional"
    value: tuple[float, float, float]  # intensity | radiance | irradiance
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    direction: tuple[float, float, float] = (0.0, -1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("point", "area", "directional"):
            raise SceneError(f"unknown emitter kind {self.kind!r}")
        as_spectrum(self.value)

    @property
    def is_delta(self) -> bool:
        return self.kind in ("point", "directional")


@dataclass(frozen=True)
class Surface:
    """Scene surface: sphere, axis-aligned box, or quad (origin + two edges).

    Material is Lambertian (albedo), black (pure absorber), or a reference
    to an emitter (pure emitter: paths terminate there).
    """

    geometry: str  # "sphere" | "box" | "quad"
    params: tuple[float, ...]  # sphere: cx,cy,cz,r; box: lo,hi; quad: o,u,v
    material: str  # "lambertian" | "black" | "emitter"
    albedo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    emitter_index: int = -1

    def __post_init__(self):
        n_expected = {"sphere": 4, "box": 6, "quad": 9}
        if self.geometry not in n_expected:
            raise SceneError(f"unknown surface geometry {self.geometry!r}")
        if len(self.params) != n_expected[self.geometry]:
            raise SceneError(
                f"{self.geometry} surface expects {n_expected[self.geometry]} params, "
                f"got {len(self.params)}"
            )
        if self.material not in ("lambertian", "black", "emitter"):
            raise SceneError(f"unknown material {self.material!r}")
        if self.material == "lambertian":
            a = as_spectrum(self.albedo)
            if np.any(a > 1.0):
                raise SceneError(f"lambertian albedo must be <= 1, got {self.albedo}")
        if self.material == "emitter" and self.geometry != "quad":
            raise SceneError("emitter surfaces must be quads")


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; fov is the vertical field of view in degrees."""

    origin: tuple[float, float, float]
    look_at: tuple[float, float, float]
    fov: float
    resolution: tuple[int, int]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if not (0.0 < self.fov < 180.0):
            raise SceneError(f"camera fov must lie in (0, 180), got {self.fov}")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise SceneError(f"camera resolution must be >= 1x1, got {self.resolution}")
        fwd = np.array(self.look_at) - np.array(self.origin)
        if np.linalg.norm(fwd) < 1e-12:
            raise SceneError("camera origin and look_at coincide")


@dataclass
class Scene:
    camera: Camera
    media: list[Medium] = field(default_factory=list)
    surfaces: list[Surface] = field(default_factory=list)
    emitters: list[Emitter] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if len(self.emitters) == 0:
            raise SceneError("scene has no emitters")
        refs: dict[int, int] = {}
        for i, s in enumerate(self.surfaces):
            if s.material == "emitter":
                if not (0 <= s.emitter_index < len(self.emitters)):
                    raise SceneError(f"surface {i} references unknown emitter {s.emitter_index}")
                if self.emitters[s.emitter_index].kind != "area":
                    raise SceneError(
                        f"surface {i} references emitter {s.emitter_index}, "
                        "which is not an area emitter"
                    )
                if s.emitter_index in refs:
                    raise SceneError(
                        f"emitter {s.emitter_index} referenced by surfaces "
                        f"{refs[s.emitter_index]} and {i}; at most one allowed"
                    )
                refs[s.emitter_index] = i
        for j, e in enumerate(self.emitters):
            if e.kind == "area" and j not in refs:
                raise SceneError(f"area emitter {j} is not referenced by any surface")
        for a in range(len(self.media)):
            for b in range(a + 1, len(self.media)):
                if _boxes_overlap(self.media[a].bounds, self.media[b].bounds):
                    raise SceneError(
                        f"media '{self.media[a].name}' and '{self.media[b].name}' overlap; "
                        "nesting is unsupported"
                    )

    def area_emitter_surface(self, emitter_index: int) -> Surface:
        for s in self.surfaces:
            if s.material == "emitter" and s.emitter_index == emitter_index:
                return s
        raise SceneError(f"area emitter {emitter_index} has no surface")


def _boxes_overlap(a, b) -> bool:
    return all(a[i] < b[3 + i] and b[i] < a[3 + i] for i in range(3))


def make_camera(origin, look_at, fov, resolution, up=(0.0, 1.0, 0.0)) -> Camera:
    return Camera(_vec3(origin), _vec3(look_at), float(fov), (int(resolution[0]), int(resolution[1])), _vec3(up))
