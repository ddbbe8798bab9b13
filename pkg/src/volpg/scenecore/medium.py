"""Free-flight sampling and transmittance in participating media.

Homogeneous media use analog exponential sampling driven by the mean of
the extinction channels, with per-channel reweighting so no channel ever
sees a zero pdf. Grid media use delta tracking (distance) and ratio
tracking (transmittance) against a scalar majorant, carrying per-channel
null-collision weights. All estimators return weights whose expectation
is Tr (pass) or Tr/p_t (scatter), the factors the path graph consumes.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from volpg.rng import next_f64
from volpg.scenecore.geometry import ray_aabb
from volpg.scenecore.types import Medium


@dataclass
class FlightScatter:
    t: float
    weight: np.ndarray  # Tr / p_t per channel


@dataclass
class FlightPass:
    weight: np.ndarray  # Tr / P(no collision) per channel


@njit(cache=True, inline="always")
def grid_density(data, off, nx, ny, nz, lx, ly, lz, hx, hy, hz, px, py, pz):
    """Nearest-voxel density lookup; points outside the box clamp to the border."""
    ix = int((px - lx) / (hx - lx) * nx)
    iy = int((py - ly) / (hy - ly) * ny)
    iz = int((pz - lz) / (hz - lz) * nz)
    ix = min(max(ix, 0), nx - 1)
    iy = min(max(iy, 0), ny - 1)
    iz = min(max(iz, 0), nz - 1)
    return np.float64(data[off + (iz * ny + iy) * nx + ix])


@njit(cache=True)
def flight_one_medium(med, k, ox, oy, oz, dx, dy, dz, a, b, state):
    """Free flight through medium k on [a, b] of the ray.

    Returns (state, scattered, t, wr, wg, wb).
    """
    kind = med[0][k]
    st = med[1][k]
    length = b - a
    if kind == 0:
        sbar = (st[0] + st[1] + st[2]) / 3.0
        if sbar <= 0.0:
            return state, False, b, 1.0, 1.0, 1.0
        state, u = next_f64(state)
        d = -np.log1p(-u) / sbar
        if d >= length:
            wr = np.exp(-(st[0] - sbar) * length)
            wg = np.exp(-(st[1] - sbar) * length)
            wb = np.exp(-(st[2] - sbar) * length)
            return state, False, b, wr, wg, wb
        wr = np.exp(-(st[0] - sbar) * d) / sbar
        wg = np.exp(-(st[1] - sbar) * d) / sbar
        wb = np.exp(-(st[2] - sbar) * d) / sbar
        return state, True, a + d, wr, wg, wb

    mu = med[5][k]
    if mu <= 0.0:
        return state, False, b, 1.0, 1.0, 1.0
    scale = med[6][k]
    bounds = med[4][k]
    dims = med[9][k]
    off = med[8][k]
    data = med[7]
    t = a
    wr = 1.0
    wg = 1.0
    wb = 1.0
    while True:
        state, u = next_f64(state)
        t += -np.log1p(-u) / mu
        if t >= b:
            return state, False, b, wr, wg, wb
        px = ox + t * dx
        py = oy + t * dy
        pz = oz + t * dz
        dens = grid_density(
            data, off, dims[0], dims[1], dims[2],
            bounds[0], bounds[1], bounds[2], bounds[3], bounds[4], bounds[5],
            px, py, pz,
        ) * scale
        sr = st[0] * dens
        sg = st[1] * dens
        sb = st[2] * dens
        sbar = (sr + sg + sb) / 3.0
        state, u2 = next_f64(state)
        if u2 * mu < sbar:
            inv = 1.0 / sbar
            return state, True, t, wr * inv, wg * inv, wb * inv
        denom = mu - sbar
        wr *= (mu - sr) / denom
        wg *= (mu - sg) / denom
        wb *= (mu - sb) / denom


@njit(cache=True)
def transmittance_one_medium(med, k, ox, oy, oz, dx, dy, dz, a, b, state):
    """Transmittance through medium k on [a, b]: closed form or ratio tracking."""
    kind = med[0][k]
    st = med[1][k]
    length = b - a
    if length <= 0.0:
        return state, 1.0, 1.0, 1.0
    if kind == 0:
        return (
            state,
            np.exp(-st[0] * length),
            np.exp(-st[1] * length),
            np.exp(-st[2] * length),
        )
    mu = med[5][k]
    if mu <= 0.0:
        return state, 1.0, 1.0, 1.0
    scale = med[6][k]
    bounds = med[4][k]
    dims = med[9][k]
    off = med[8][k]
    data = med[7]
    t = a
    wr = 1.0
    wg = 1.0
    wb = 1.0
    while True:
        state, u = next_f64(state)
        t += -np.log1p(-u) / mu
        if t >= b:
            return state, wr, wg, wb
        px = ox + t * dx
        py = oy + t * dy
        pz = oz + t * dz
        dens = grid_density(
            data, off, dims[0], dims[1], dims[2],
            bounds[0], bounds[1], bounds[2], bounds[3], bounds[4], bounds[5],
            px, py, pz,
        ) * scale
        wr *= 1.0 - st[0] * dens / mu
        wg *= 1.0 - st[1] * dens / mu
        wb *= 1.0 - st[2] * dens / mu
        if wr == 0.0 and wg == 0.0 and wb == 0.0:
            return state, 0.0, 0.0, 0.0


@njit(cache=True)
def media_flight(med, ox, oy, oz, dx, dy, dz, t_lo, t_hi, state):
    """Free flight across every medium interval on [t_lo, t_hi], in order.

    Returns (state, scattered, t, medium index, wr, wg, wb); the weight
    accumulates pass factors of traversed intervals and, on scatter, the
    Tr/p_t factor of the scattering interval.
    """
    n = med[0].shape[0]
    cur = t_lo
    wr = 1.0
    wg = 1.0
    wb = 1.0
    for _ in range(2 * n + 1):
        best_k = -1
        best_a = t_hi
        best_b = t_hi
        for k in range(n):
            bd = med[4][k]
            t0, t1 = ray_aabb(ox, oy, oz, dx, dy, dz, bd[0], bd[1], bd[2], bd[3], bd[4], bd[5])
            a = max(t0, cur)
            b = min(t1, t_hi)
            if b > a + 1e-12 and a < best_a:
                best_a = a
                best_k = k
                best_b = b
        if best_k < 0:
            return state, False, t_hi, -1, wr, wg, wb
        state, sc, t, r, g, b_ = flight_one_medium(
            med, best_k, ox, oy, oz, dx, dy, dz, best_a, best_b, state
        )
        wr *= r
        wg *= g
        wb *= b_
        if sc:
            return state, True, t, best_k, wr, wg, wb
        cur = best_b + 1e-12
    return state, False, t_hi, -1, wr, wg, wb


@njit(cache=True)
def media_transmittance(med, ox, oy, oz, dx, dy, dz, t_lo, t_hi, state):
    """Product of per-medium transmittance over every interval on [t_lo, t_hi]."""
    n = med[0].shape[0]
    wr = 1.0
    wg = 1.0
    wb = 1.0
    for k in range(n):
        bd = med[4][k]
        t0, t1 = ray_aabb(ox, oy, oz, dx, dy, dz, bd[0], bd[1], bd[2], bd[3], bd[4], bd[5])
        a = max(t0, t_lo)
        b = min(t1, t_hi)
        if b > a + 1e-12:
            state, r, g, b_ = transmittance_one_medium(
                med, k, ox, oy, oz, dx, dy, dz, a, b, state
            )
            wr *= r
            wg *= g
            wb *= b_
    return state, wr, wg, wb


def _medium_arrays(medium: Medium):
    cached = medium.__dict__.get("_flat_cache")
    if cached is not None:
        return cached
    kind = np.array([0 if medium.kind == "homogeneous" else 1], dtype=np.int8)
    sigma_t = np.array([medium.sigma_t], dtype=np.float64)
    sigma_s = np.array([medium.sigma_s], dtype=np.float64)
    g = np.array([medium.phase_g], dtype=np.float64)
    bounds = np.array([medium.bounds], dtype=np.float64)
    majorant = np.array([medium.majorant], dtype=np.float64)
    scale = np.array([medium.density_scale], dtype=np.float64)
    if medium.kind == "grid":
        data = np.ascontiguousarray(medium.density, dtype=np.float32).ravel()
        nz, ny, nx = medium.density.shape
        dims = np.array([[nx, ny, nz]], dtype=np.int32)
    else:
        data = np.zeros(0, dtype=np.float32)
        dims = np.zeros((1, 3), dtype=np.int32)
    offset = np.zeros(1, dtype=np.int64)
    med = (kind, sigma_t, sigma_s, g, bounds, majorant, scale, data, offset, dims)
    medium.__dict__["_flat_cache"] = med
    return med


def _state_from(rng: np.random.Generator):
    return np.uint64(rng.integers(0, np.iinfo(np.int64).max, dtype=np.int64))


def transmittance(medium: Medium, x, y, rng: np.random.Generator = None) -> np.ndarray:
    """Transmittance between two points inside the medium bounds.

    Homogeneous media are exact and deterministic; grid media return one
    unbiased ratio-tracking estimate (rng required).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    delta = y - x
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        return np.ones(3)
    if medium.kind == "homogeneous":
        return np.exp(-np.asarray(medium.sigma_t) * dist)
    if rng is None:
        raise ValueError("grid transmittance is stochastic; pass an rng")
    med = _medium_arrays(medium)
    d = delta / dist
    state = _state_from(rng)
    _, wr, wg, wb = transmittance_one_medium(
        med, 0, x[0], x[1], x[2], d[0], d[1], d[2], 0.0, dist, state
    )
    return np.array([wr, wg, wb])


def sample_distance(medium: Medium, ray, rng: np.random.Generator):
    """Sample a scattering distance along ray = (origin, direction, t_max).

    Returns FlightScatter(t, weight=Tr/p_t) or FlightPass(weight=Tr/P(pass)).
    """
    origin, direction, t_max = ray
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    med = _medium_arrays(medium)
    state = _state_from(rng)
    _, scattered, t, wr, wg, wb = flight_one_medium(
        med, 0, o[0], o[1], o[2], d[0], d[1], d[2], 0.0, float(t_max), state
    )
    weight = np.array([wr, wg, wb])
    if scattered:
        return FlightScatter(float(t), weight)
    return FlightPass(weight)
