"""Ray-primitive intersection (spheres, axis-aligned boxes, quads).

Scalar njit cores shared by the tracing kernels and the public API.
Nearest positive-t wins; exact ties keep the lowest surface id (the scan
never replaces on equal t).
"""

import numpy as np
from numba import njit

from volpg.scenecore.types import Scene

T_EPS = 1e-7  # minimum hit distance; also the shadow-ray clearance
NO_HIT = 1e30


@njit(cache=True, inline="always")
def ray_sphere(ox, oy, oz, dx, dy, dz, cx, cy, cz, r, t_min):
    lx = ox - cx
    ly = oy - cy
    lz = oz - cz
    b = lx * dx + ly * dy + lz * dz
    c = lx * lx + ly * ly + lz * lz - r * r
    disc = b * b - c
    if disc < 0.0:
        return NO_HIT
    s = np.sqrt(disc)
    t0 = -b - s
    if t0 > t_min:
        return t0
    t1 = -b + s
    if t1 > t_min:
        return t1
    return NO_HIT


@njit(cache=True, inline="always")
def ray_aabb(ox, oy, oz, dx, dy, dz, lx, ly, lz, hx, hy, hz):
    """Slab test; returns (t_enter, t_exit), t_enter > t_exit when missed."""
    t0 = -NO_HIT
    t1 = NO_HIT
    if dx != 0.0:
        inv = 1.0 / dx
        a = (lx - ox) * inv
        b = (hx - ox) * inv
        if a > b:
            a, b = b, a
        t0 = max(t0, a)
        t1 = min(t1, b)
    elif ox < lx or ox > hx:
        return 1.0, -1.0
    if dy != 0.0:
        inv = 1.0 / dy
        a = (ly - oy) * inv
        b = (hy - oy) * inv
        if a > b:
            a, b = b, a
        t0 = max(t0, a)
        t1 = min(t1, b)
    elif oy < ly or oy > hy:
        return 1.0, -1.0
    if dz != 0.0:
        inv = 1.0 / dz
        a = (lz - oz) * inv
        b = (hz - oz) * inv
        if a > b:
            a, b = b, a
        t0 = max(t0, a)
        t1 = min(t1, b)
    elif oz < lz or oz > hz:
        return 1.0, -1.0
    return t0, t1


@njit(cache=True, inline="always")
def ray_box(ox, oy, oz, dx, dy, dz, lx, ly, lz, hx, hy, hz, t_min):
    t0, t1 = ray_aabb(ox, oy, oz, dx, dy, dz, lx, ly, lz, hx, hy, hz)
    if t0 > t1:
        return NO_HIT
    if t0 > t_min:
        return t0
    if t1 > t_min:
        return t1
    return NO_HIT


@njit(cache=True, inline="always")
def box_normal(px, py, pz, lx, ly, lz, hx, hy, hz):
    """Outward normal of the box face nearest to the surface point."""
    best = abs(px - lx)
    nx, ny, nz = -1.0, 0.0, 0.0
    d = abs(px - hx)
    if d < best:
        best = d
        nx, ny, nz = 1.0, 0.0, 0.0
    d = abs(py - ly)
    if d < best:
        best = d
        nx, ny, nz = 0.0, -1.0, 0.0
    d = abs(py - hy)
    if d < best:
        best = d
        nx, ny, nz = 0.0, 1.0, 0.0
    d = abs(pz - lz)
    if d < best:
        best = d
        nx, ny, nz = 0.0, 0.0, -1.0
    d = abs(pz - hz)
    if d < best:
        nx, ny, nz = 0.0, 0.0, 1.0
    return nx, ny, nz


@njit(cache=True, inline="always")
def quad_normal(ux, uy, uz, vx, vy, vz):
    nx = uy * vz - uz * vy
    ny = uz * vx - ux * vz
    nz = ux * vy - uy * vx
    inv = 1.0 / np.sqrt(nx * nx + ny * ny + nz * nz)
    return nx * inv, ny * inv, nz * inv


@njit(cache=True, inline="always")
def ray_quad(ox, oy, oz, dx, dy, dz, qx, qy, qz, ux, uy, uz, vx, vy, vz, t_min):
    nx, ny, nz = quad_normal(ux, uy, uz, vx, vy, vz)
    denom = dx * nx + dy * ny + dz * nz
    if abs(denom) < 1e-12:
        return NO_HIT
    t = ((qx - ox) * nx + (qy - oy) * ny + (qz - oz) * nz) / denom
    if t <= t_min:
        return NO_HIT
    px = ox + t * dx - qx
    py = oy + t * dy - qy
    pz = oz + t * dz - qz
    uu = ux * ux + uy * uy + uz * uz
    vv = vx * vx + vy * vy + vz * vz
    a = (px * ux + py * uy + pz * uz) / uu
    b = (px * vx + py * vy + pz * vz) / vv
    if a < 0.0 or a > 1.0 or b < 0.0 or b > 1.0:
        return NO_HIT
    return t


@njit(cache=True)
def intersect_arrays(surf_type, surf_params, ox, oy, oz, dx, dy, dz, t_min, t_max):
    """Nearest hit over all surfaces; returns (t, surface index) or (t_max-ish, -1)."""
    best_t = t_max
    best_i = -1
    for i in range(surf_type.shape[0]):
        p = surf_params[i]
        if surf_type[i] == 0:
            t = ray_sphere(ox, oy, oz, dx, dy, dz, p[0], p[1], p[2], p[3], t_min)
        elif surf_type[i] == 1:
            t = ray_box(ox, oy, oz, dx, dy, dz, p[0], p[1], p[2], p[3], p[4], p[5], t_min)
        else:
            t = ray_quad(
                ox, oy, oz, dx, dy, dz,
                p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], t_min,
            )
        if t < best_t:
            best_t = t
            best_i = i
    return best_t, best_i


@njit(cache=True)
def surface_normal_at(surf_type, surf_params, idx, px, py, pz):
    p = surf_params[idx]
    if surf_type[idx] == 0:
        inv = 1.0 / p[3]
        return (px - p[0]) * inv, (py - p[1]) * inv, (pz - p[2]) * inv
    if surf_type[idx] == 1:
        return box_normal(px, py, pz, p[0], p[1], p[2], p[3], p[4], p[5])
    return quad_normal(p[3], p[4], p[5], p[6], p[7], p[8])


def intersect(scene: Scene, origin, direction):
    """Nearest positive-t intersection; returns a dict or None on miss."""
    from volpg.scenecore.flatten import flatten_scene

    data = flatten_scene(scene)
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    t, idx = intersect_arrays(
        data.surf_type, data.surf_params, o[0], o[1], o[2], d[0], d[1], d[2], T_EPS, NO_HIT
    )
    if idx < 0:
        return None
    p = o + t * d
    n = np.array(surface_normal_at(data.surf_type, data.surf_params, idx, p[0], p[1], p[2]))
    surf = scene.surfaces[idx]
    return {
        "t": float(t),
        "surface": idx,
        "point": p,
        "normal": n,
        "material": surf.material,
    }
