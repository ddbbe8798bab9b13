"""Henyey-Greenstein phase function evaluation and sampling.

The HG density doubles as its own solid-angle pdf, so `sample_phase`
returns exactly `eval_phase` of the drawn pair. Conventions: both
arguments of `eval_phase` are unit vectors and the density is evaluated
at cos(theta) = wi . wo; callers pick the orientation.
"""

import numpy as np
from numba import njit

from volpg.scenecore.types import PhaseHG

INV_4PI = 1.0 / (4.0 * np.pi)


def hg_pdf(cos_theta, g):
    """HG density at the given scattering cosine. Works on scalars or arrays."""
    g2 = g * g
    denom = 1.0 + g2 - 2.0 * g * cos_theta
    return INV_4PI * (1.0 - g2) / (denom * np.sqrt(denom))


hg_pdf_nb = njit(cache=True, inline="always")(hg_pdf)


@njit(cache=True, inline="always")
def hg_sample_cos(g, u):
    """Draw cos(theta) from the HG distribution via inverse CDF."""
    if abs(g) < 1e-6:
        return 1.0 - 2.0 * u
    s = (1.0 - g * g) / (1.0 - g + 2.0 * g * u)
    c = (1.0 + g * g - s * s) / (2.0 * g)
    return min(1.0, max(-1.0, c))


@njit(cache=True, inline="always")
def make_frame(nx, ny, nz):
    """Orthonormal basis with the given unit vector as the third axis."""
    if abs(nx) > 0.9:
        bx, by, bz = 0.0, 1.0, 0.0
    else:
        bx, by, bz = 1.0, 0.0, 0.0
    tx = by * nz - bz * ny
    ty = bz * nx - bx * nz
    tz = bx * ny - by * nx
    inv = 1.0 / np.sqrt(tx * tx + ty * ty + tz * tz)
    tx *= inv
    ty *= inv
    tz *= inv
    sx = ny * tz - nz * ty
    sy = nz * tx - nx * tz
    sz = nx * ty - ny * tx
    return tx, ty, tz, sx, sy, sz


@njit(cache=True, inline="always")
def hg_sample_dir(g, ax, ay, az, u1, u2):
    """Sample a direction about the unit axis (ax, ay, az); returns (dir, pdf)."""
    ct = hg_sample_cos(g, u1)
    st = np.sqrt(max(0.0, 1.0 - ct * ct))
    phi = 2.0 * np.pi * u2
    tx, ty, tz, sx, sy, sz = make_frame(ax, ay, az)
    cp = np.cos(phi)
    sp = np.sin(phi)
    dx = st * cp * tx + st * sp * sx + ct * ax
    dy = st * cp * ty + st * sp * sy + ct * ay
    dz = st * cp * tz + st * sp * sz + ct * az
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    return dx * inv, dy * inv, dz * inv, hg_pdf_nb(ct, g)


def eval_phase(phase: PhaseHG, wi, wo) -> float:
    """HG density for the direction pair; equals its own solid-angle pdf."""
    wi = np.asarray(wi, dtype=np.float64)
    wo = np.asarray(wo, dtype=np.float64)
    return float(hg_pdf(float(wi @ wo), phase.g))


def sample_phase(phase: PhaseHG, wi, rng: np.random.Generator):
    """Sample an outgoing direction about wi; the pdf equals eval_phase exactly."""
    wi = np.asarray(wi, dtype=np.float64)
    u1 = rng.random()
    u2 = rng.random()
    dx, dy, dz, pdf = hg_sample_dir(phase.g, wi[0], wi[1], wi[2], u1, u2)
    return np.array([dx, dy, dz]), float(pdf)


def sample_phase_many(phase: PhaseHG, wi, n: int, rng: np.random.Generator):
    """Vectorized sampling helper for statistical tests; same math as sample_phase."""
    wi = np.asarray(wi, dtype=np.float64)
    u = rng.random((n, 2))
    out = np.empty((n, 3))
    pdfs = np.empty(n)
    _sample_many_kernel(phase.g, wi[0], wi[1], wi[2], u, out, pdfs)
    return out, pdfs


@njit(cache=True)
def _sample_many_kernel(g, ax, ay, az, u, out, pdfs):
    for i in range(u.shape[0]):
        dx, dy, dz, p = hg_sample_dir(g, ax, ay, az, u[i, 0], u[i, 1])
        out[i, 0] = dx
        out[i, 1] = dy
        out[i, 2] = dz
        pdfs[i] = p
