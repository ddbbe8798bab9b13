"""Flatten a Scene into the packed arrays the njit kernels consume.

The flattened form is cached on the Scene instance; scenes are immutable
after load so the cache never invalidates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from volpg.scenecore.types import Scene, SceneError
from volpg.scenecore.geometry import quad_normal

SURF_SPHERE, SURF_BOX, SURF_QUAD = 0, 1, 2
MAT_LAMBERTIAN, MAT_BLACK, MAT_EMITTER = 0, 1, 2
EM_POINT, EM_AREA, EM_DIRECTIONAL = 0, 1, 2
MED_HOMOGENEOUS, MED_GRID = 0, 1


@dataclass
class SceneData:
    surf_type: np.ndarray
    surf_params: np.ndarray
    mat_type: np.ndarray
    albedo: np.ndarray
    emitter_id: np.ndarray
    em_type: np.ndarray
    em_value: np.ndarray
    em_pos: np.ndarray
    em_quad: np.ndarray
    em_normal: np.ndarray
    em_area: np.ndarray
    med_kind: np.ndarray
    med_sigma_t: np.ndarray
    med_sigma_s: np.ndarray
    med_g: np.ndarray
    med_bounds: np.ndarray
    med_majorant: np.ndarray
    med_scale: np.ndarray
    med_grid_data: np.ndarray
    med_grid_offset: np.ndarray
    med_grid_dims: np.ndarray
    cam_origin: np.ndarray
    cam_forward: np.ndarray
    cam_right: np.ndarray
    cam_up: np.ndarray
    cam_tan_half: float
    width: int
    height: int

    @property
    def surfaces(self):
        return (self.surf_type, self.surf_params, self.mat_type, self.albedo, self.emitter_id)

    @property
    def emitters(self):
        return (self.em_type, self.em_value, self.em_pos, self.em_quad, self.em_normal, self.em_area)

    @property
    def media(self):
        return (
            self.med_kind,
            self.med_sigma_t,
            self.med_sigma_s,
            self.med_g,
            self.med_bounds,
            self.med_majorant,
            self.med_scale,
            self.med_grid_data,
            self.med_grid_offset,
            self.med_grid_dims,
        )

    @property
    def camera(self):
        return (
            self.cam_origin[0], self.cam_origin[1], self.cam_origin[2],
            self.cam_forward[0], self.cam_forward[1], self.cam_forward[2],
            self.cam_right[0], self.cam_right[1], self.cam_right[2],
            self.cam_up[0], self.cam_up[1], self.cam_up[2],
            self.cam_tan_half, float(self.width), float(self.height),
        )


def flatten_scene(scene: Scene) -> SceneData:
    cached = scene.__dict__.get("_flat_cache")
    if cached is not None:
        return cached

    ns = len(scene.surfaces)
    surf_type = np.zeros(ns, dtype=np.int8)
    surf_params = np.zeros((ns, 9), dtype=np.float64)
    mat_type = np.zeros(ns, dtype=np.int8)
    albedo = np.zeros((ns, 3), dtype=np.float64)
    emitter_id = np.full(ns, -1, dtype=np.int32)
    geo_codes = {"sphere": SURF_SPHERE, "box": SURF_BOX, "quad": SURF_QUAD}
    mat_codes = {"lambertian": MAT_LAMBERTIAN, "black": MAT_BLACK, "emitter": MAT_EMITTER}
    for i, s in enumerate(scene.surfaces):
        surf_type[i] = geo_codes[s.geometry]
        surf_params[i, : len(s.params)] = s.params
        mat_type[i] = mat_codes[s.material]
        albedo[i] = s.albedo
        emitter_id[i] = s.emitter_index

    ne = len(scene.emitters)
    em_type = np.zeros(ne, dtype=np.int8)
    em_value = np.zeros((ne, 3), dtype=np.float64)
    em_pos = np.zeros((ne, 3), dtype=np.float64)
    em_quad = np.zeros((ne, 9), dtype=np.float64)
    em_normal = np.zeros((ne, 3), dtype=np.float64)
    em_area = np.zeros(ne, dtype=np.float64)
    for j, e in enumerate(scene.emitters):
        em_value[j] = e.value
        if e.kind == "point":
            em_type[j] = EM_POINT
            em_pos[j] = e.position
        elif e.kind == "directional":
            em_type[j] = EM_DIRECTIONAL
            d = np.asarray(e.direction, dtype=np.float64)
            norm = np.linalg.norm(d)
            if norm < 1e-12:
                raise SceneError(f"directional emitter {j} has a zero direction")
            em_pos[j] = d / norm
        else:
            em_type[j] = EM_AREA
            quad = scene.area_emitter_surface(j)
            em_quad[j] = quad.params
            u = np.asarray(quad.params[3:6])
            v = np.asarray(quad.params[6:9])
            cr = np.cross(u, v)
            area = float(np.linalg.norm(cr))
            if area < 1e-12:
                raise SceneError(f"area emitter {j} has a degenerate quad")
            em_area[j] = area
            em_normal[j] = np.array(
                quad_normal(u[0], u[1], u[2], v[0], v[1], v[2])
            )

    nm = len(scene.media)
    med_kind = np.zeros(nm, dtype=np.int8)
    med_sigma_t = np.zeros((nm, 3), dtype=np.float64)
    med_sigma_s = np.zeros((nm, 3), dtype=np.float64)
    med_g = np.zeros(nm, dtype=np.float64)
    med_bounds = np.zeros((nm, 6), dtype=np.float64)
    med_majorant = np.zeros(nm, dtype=np.float64)
    med_scale = np.ones(nm, dtype=np.float64)
    med_grid_dims = np.zeros((nm, 3), dtype=np.int32)
    med_grid_offset = np.zeros(nm, dtype=np.int64)
    chunks = []
    offset = 0
    for k, m in enumerate(scene.media):
        med_kind[k] = MED_HOMOGENEOUS if m.kind == "homogeneous" else MED_GRID
        med_sigma_t[k] = m.sigma_t
        med_sigma_s[k] = m.sigma_s
        med_g[k] = m.phase_g
        med_bounds[k] = m.bounds
        med_majorant[k] = m.majorant
        med_scale[k] = m.density_scale
        if m.kind == "grid":
            d = np.ascontiguousarray(m.density, dtype=np.float32)
            nz, ny, nx = d.shape
            med_grid_dims[k] = (nx, ny, nz)
            med_grid_offset[k] = offset
            chunks.append(d.ravel())
            offset += d.size
    med_grid_data = (
        np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.float32)
    )

    cam = scene.camera
    origin = np.asarray(cam.origin, dtype=np.float64)
    forward = np.asarray(cam.look_at, dtype=np.float64) - origin
    forward /= np.linalg.norm(forward)
    up_hint = np.asarray(cam.up, dtype=np.float64)
    right = np.cross(forward, up_hint)
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        right = np.cross(forward, np.array([1.0, 0.0, 0.0]))
        norm = np.linalg.norm(right)
    right /= norm
    upv = np.cross(right, forward)
    tan_half = float(np.tan(np.radians(cam.fov) * 0.5))
    width, height = cam.resolution

    data = SceneData(
        surf_type, surf_params, mat_type, albedo, emitter_id,
        em_type, em_value, em_pos, em_quad, em_normal, em_area,
        med_kind, med_sigma_t, med_sigma_s, med_g, med_bounds,
        med_majorant, med_scale, med_grid_data, med_grid_offset, med_grid_dims,
        origin, forward, right, upv, tan_half, int(width), int(height),
    )
    scene.__dict__["_flat_cache"] = data
    return data
