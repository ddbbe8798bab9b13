"""Emitter sampling for next-event estimation.

`sample_emitter` returns incoming direct radiance D(x, w): emitted
radiance times visibility times transmittance along the shadow segment.
Area lights report a solid-angle pdf (selection times positional pdf,
converted by d^2 / (A cos)); point and directional lights are delta
distributions whose delta and selection factor are folded into the
returned radiance, with pdf_sa fixed at 1.
"""

import numpy as np
from numba import njit

from volpg.rng import next_f64
from volpg.scenecore.flatten import flatten_scene, EM_POINT, EM_AREA, EM_DIRECTIONAL, MAT_EMITTER
from volpg.scenecore.geometry import T_EPS, NO_HIT, intersect_arrays
from volpg.scenecore.medium import media_transmittance
from volpg.scenecore.types import Scene


@njit(cache=True)
def sample_emitter_core(surf, em, med, px, py, pz, state):
    """Returns (state, wx, wy, wz, pdf_sa, is_delta, dr, dg, db)."""
    em_type = em[0]
    n_em = em_type.shape[0]
    state, u = next_f64(state)
    e = min(int(u * n_em), n_em - 1)
    value = em[1][e]
    sel = np.float64(n_em)  # folded as 1/Ne in pdf (area) or Ne in D (delta)

    if em_type[e] == 1:  # area
        quad = em[3][e]
        state, u1 = next_f64(state)
        state, u2 = next_f64(state)
        qx = quad[0] + u1 * quad[3] + u2 * quad[6]
        qy = quad[1] + u1 * quad[4] + u2 * quad[7]
        qz = quad[2] + u1 * quad[5] + u2 * quad[8]
        dx = qx - px
        dy = qy - py
        dz = qz - pz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < 1e-16:
            return state, 0.0, 0.0, 1.0, 1.0, False, 0.0, 0.0, 0.0
        dist = np.sqrt(d2)
        wx = dx / dist
        wy = dy / dist
        wz = dz / dist
        nq = em[4][e]
        cos_q = -(nq[0] * wx + nq[1] * wy + nq[2] * wz)
        area = em[5][e]
        pdf_sa = d2 / (area * max(abs(cos_q), 1e-12) * sel)
        if cos_q <= 0.0:  # behind the emission side
            return state, wx, wy, wz, pdf_sa, False, 0.0, 0.0, 0.0
        t_hit, _ = intersect_arrays(
            surf[0], surf[1], px, py, pz, wx, wy, wz, T_EPS, dist - 1e-6 * max(1.0, dist)
        )
        if t_hit < dist - 1e-6 * max(1.0, dist):
            return state, wx, wy, wz, pdf_sa, False, 0.0, 0.0, 0.0
        state, tr_r, tr_g, tr_b = media_transmittance(
            med, px, py, pz, wx, wy, wz, 0.0, dist, state
        )
        return (
            state, wx, wy, wz, pdf_sa, False,
            value[0] * tr_r, value[1] * tr_g, value[2] * tr_b,
        )

    if em_type[e] == 0:  # point
        pos = em[2][e]
        dx = pos[0] - px
        dy = pos[1] - py
        dz = pos[2] - pz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < 1e-16:
            return state, 0.0, 0.0, 1.0, 1.0, True, 0.0, 0.0, 0.0
        dist = np.sqrt(d2)
        wx = dx / dist
        wy = dy / dist
        wz = dz / dist
        t_hit, _ = intersect_arrays(
            surf[0], surf[1], px, py, pz, wx, wy, wz, T_EPS, dist - 1e-6 * max(1.0, dist)
        )
        if t_hit < dist - 1e-6 * max(1.0, dist):
            return state, wx, wy, wz, 1.0, True, 0.0, 0.0, 0.0
        state, tr_r, tr_g, tr_b = media_transmittance(
            med, px, py, pz, wx, wy, wz, 0.0, dist, state
        )
        inv_d2 = sel / d2
        return (
            state, wx, wy, wz, 1.0, True,
            value[0] * tr_r * inv_d2, value[1] * tr_g * inv_d2, value[2] * tr_b * inv_d2,
        )

    # directional: light travels along em_pos; sample direction is its reverse
    ldir = em[2][e]
    wx = -ldir[0]
    wy = -ldir[1]
    wz = -ldir[2]
    t_hit, _ = intersect_arrays(surf[0], surf[1], px, py, pz, wx, wy, wz, T_EPS, NO_HIT)
    if t_hit < NO_HIT:
        return state, wx, wy, wz, 1.0, True, 0.0, 0.0, 0.0
    state, tr_r, tr_g, tr_b = media_transmittance(
        med, px, py, pz, wx, wy, wz, 0.0, NO_HIT, state
    )
    return (
        state, wx, wy, wz, 1.0, True,
        value[0] * tr_r * sel, value[1] * tr_g * sel, value[2] * tr_b * sel,
    )


@njit(cache=True)
def pdf_emitter_dir_core(surf, em, px, py, pz, wx, wy, wz):
    """Solid-angle density with which sample_emitter would produce direction w.

    Based on the nearest surface hit along w: zero when w hits no emitter;
    delta emitters are never produced by a direction query, so they report 0.
    """
    t_hit, idx = intersect_arrays(surf[0], surf[1], px, py, pz, wx, wy, wz, T_EPS, NO_HIT)
    if idx < 0 or surf[2][idx] != 2:
        return 0.0
    e = surf[4][idx]
    if em[0][e] != 1:
        return 0.0
    nq = em[4][e]
    cos_q = abs(nq[0] * wx + nq[1] * wy + nq[2] * wz)
    if cos_q < 1e-12:
        return 0.0
    area = em[5][e]
    n_em = em[0].shape[0]
    return t_hit * t_hit / (area * cos_q * n_em)


def sample_emitter(scene: Scene, x, rng: np.random.Generator):
    """Draw one NEE sample at x; returns {dir, pdf_sa, radiance, delta}."""
    data = flatten_scene(scene)
    x = np.asarray(x, dtype=np.float64)
    state = np.uint64(rng.integers(0, np.iinfo(np.int64).max, dtype=np.int64))
    (_, wx, wy, wz, pdf_sa, is_delta, dr, dg, db) = sample_emitter_core(
        data.surfaces, data.emitters, data.media, x[0], x[1], x[2], state
    )
    return {
        "dir": np.array([wx, wy, wz]),
        "pdf_sa": float(pdf_sa),
        "radiance": np.array([dr, dg, db]),
        "delta": bool(is_delta),
    }


def pdf_emitter_dir(scene: Scene, x, w) -> float:
    data = flatten_scene(scene)
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    return float(
        pdf_emitter_dir_core(data.surfaces, data.emitters, x[0], x[1], x[2], w[0], w[1], w[2])
    )
