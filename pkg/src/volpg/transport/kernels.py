"""Instrumented volumetric path tracing kernels.

One scalar `trace_one` drives all render modes so baseline and recording
renders follow bit-identical sample sequences:

  mode 0 (off)    estimate only, nothing stored (reference renders)
  mode 1 (count)  estimate plus per-path record counts
  mode 2 (fill)   estimate plus full record capture at given offsets

Record capture is two-pass (count, prefix-sum offsets, fill); both passes
replay the same counter-based rng streams so the filled records describe
exactly the paths that produced the image.

Conventions: directions stored on records point away from the shading
point; `omega_out` toward the previous vertex, sample directions toward
the light / continuation. Phase pdfs anchor on the arrival direction
(-omega_out). The pixel estimate is the classic two-strategy balance
heuristic between next-event estimation and phase sampling, accumulated
forward; the backward sweep only fills the recorded incoming-indirect
values and never feeds the image.
"""

import numpy as np
from numba import njit, prange

from volpg.rng import SALT_EXTRA_DIRECT, SALT_TRACE, make_stream, next_f64
from volpg.scenecore.geometry import NO_HIT, T_EPS, intersect_arrays, surface_normal_at
from volpg.scenecore.medium import grid_density, media_flight
from volpg.scenecore.emitters import sample_emitter_core
from volpg.scenecore.phase import hg_pdf_nb, hg_sample_dir, make_frame

MODE_OFF = 0
MODE_COUNT = 1
MODE_FILL = 2

SURF_OFFSET_EPS = 1e-6
INV_PI = 1.0 / np.pi


@njit(cache=True, inline="always")
def cosine_sample_dir(nx, ny, nz, u1, u2):
    """Cosine-weighted direction about the unit normal; returns (dir, pdf)."""
    z = np.sqrt(max(1e-12, 1.0 - u2))
    r = np.sqrt(max(0.0, u2))
    phi = 2.0 * np.pi * u1
    tx, ty, tz, sx, sy, sz = make_frame(nx, ny, nz)
    cp = np.cos(phi)
    sp = np.sin(phi)
    dx = r * cp * tx + r * sp * sx + z * nx
    dy = r * cp * ty + r * sp * sy + z * ny
    dz = r * cp * tz + r * sp * sz + z * nz
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    return dx * inv, dy * inv, dz * inv, z * INV_PI


@njit(cache=True, inline="always")
def emitter_dir_pdf_from_hit(surf, em, sid, t_hit, wx, wy, wz):
    """Emitter-strategy solid-angle pdf for a direction, from its nearest hit."""
    if sid < 0 or surf[2][sid] != 2:
        return 0.0
    e = surf[4][sid]
    if em[0][e] != 1:
        return 0.0
    nq = em[4][e]
    cos_q = abs(nq[0] * wx + nq[1] * wy + nq[2] * wz)
    if cos_q < 1e-12:
        return 0.0
    return t_hit * t_hit / (em[5][e] * cos_q * em[0].shape[0])


@njit(cache=True, inline="always")
def sigma_s_at(med, k, px, py, pz):
    ss = med[2][k]
    if med[0][k] == 0:
        return ss[0], ss[1], ss[2]
    bounds = med[4][k]
    dims = med[9][k]
    dens = grid_density(
        med[7], med[8][k], dims[0], dims[1], dims[2],
        bounds[0], bounds[1], bounds[2], bounds[3], bounds[4], bounds[5],
        px, py, pz,
    ) * med[6][k]
    return ss[0] * dens, ss[1] * dens, ss[2] * dens


@njit(cache=True)
def trace_one(
    surf, em, med, cam,
    px, py, path_id, seed,
    max_depth, rr_start, rr_floor,
    mode, rec_offset, rec, pth, slot,
):
    """Trace one camera path; returns (n_records, est_r, est_g, est_b)."""
    state = make_stream(seed, path_id, SALT_TRACE)
    state, jx = next_f64(state)
    state, jy = next_f64(state)

    width = cam[13]
    height = cam[14]
    aspect = width / height
    sx = (2.0 * (px + jx) / width - 1.0) * cam[12] * aspect
    sy = (1.0 - 2.0 * (py + jy) / height) * cam[12]
    dx = cam[3] + sx * cam[6] + sy * cam[9]
    dy = cam[4] + sx * cam[7] + sy * cam[10]
    dz = cam[5] + sx * cam[8] + sy * cam[11]
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    dx *= inv
    dy *= inv
    dz *= inv
    ox = cam[0]
    oy = cam[1]
    oz = cam[2]

    if mode == MODE_FILL:
        stack_dbar = np.zeros((max_depth, 3))
        stack_fp = np.zeros((max_depth, 3))
        stack_wc = np.zeros((max_depth, 3))
    else:
        stack_dbar = np.zeros((1, 3))
        stack_fp = np.zeros((1, 3))
        stack_wc = np.zeros((1, 3))

    est_r = 0.0
    est_g = 0.0
    est_b = 0.0
    beta_r = 1.0
    beta_g = 1.0
    beta_b = 1.0
    n_rec = 0
    dcam_r = 0.0
    dcam_g = 0.0
    dcam_b = 0.0
    camw_r = 0.0
    camw_g = 0.0
    camw_b = 0.0
    d0n_r = 0.0
    d0n_g = 0.0
    d0n_b = 0.0
    d0p_r = 0.0
    d0p_g = 0.0
    d0p_b = 0.0

    # Extension launch context: camera first (no MIS partner, no f_s).
    from_camera = True
    ext_fs_r = 0.0
    ext_fs_g = 0.0
    ext_fs_b = 0.0
    ext_pdf = 1.0
    rr_inv = 1.0
    allow_record = True

    while True:
        t_hit, sid = intersect_arrays(surf[0], surf[1], ox, oy, oz, dx, dy, dz, T_EPS, NO_HIT)
        pe_at_dir = emitter_dir_pdf_from_hit(surf, em, sid, t_hit, dx, dy, dz)
        if mode == MODE_FILL and not from_camera:
            rec[7][rec_offset + n_rec - 1] = pe_at_dir
        state, scattered, t_ev, mid, fw_r, fw_g, fw_b = media_flight(
            med, ox, oy, oz, dx, dy, dz, 0.0, t_hit, state
        )

        vx = ox + t_ev * dx
        vy = oy + t_ev * dy
        vz = oz + t_ev * dz

        is_volume_vertex = False
        kr = 0.0
        kg = 0.0
        kb = 0.0
        gpar = 0.0
        nx = 0.0
        ny = 0.0
        nz = 0.0
        class_id = -1

        if scattered:
            if not allow_record or n_rec >= max_depth:
                break
            kr, kg, kb = sigma_s_at(med, mid, vx, vy, vz)
            if kr == 0.0 and kg == 0.0 and kb == 0.0:
                break  # pure absorption: the vertex contributes nothing
            is_volume_vertex = True
            gpar = med[3][mid]
            class_id = mid
        else:
            if sid < 0:
                break
            mat = surf[2][sid]
            vx = ox + t_hit * dx
            vy = oy + t_hit * dy
            vz = oz + t_hit * dz
            if mat == 2:  # emitter surface: one-sided emission, path terminates
                gx, gy, gz = surface_normal_at(surf[0], surf[1], sid, vx, vy, vz)
                if gx * dx + gy * dy + gz * dz < 0.0:
                    ev = em[1][surf[4][sid]]
                    if from_camera:
                        dcam_r = fw_r * ev[0]
                        dcam_g = fw_g * ev[1]
                        dcam_b = fw_b * ev[2]
                        est_r += dcam_r
                        est_g += dcam_g
                        est_b += dcam_b
                    else:
                        # balance-heuristic partner: the emitter strategy
                        denom = ext_pdf + pe_at_dir
                        cr = ext_fs_r * fw_r * ev[0] / denom
                        cg = ext_fs_g * fw_g * ev[1] / denom
                        cb = ext_fs_b * fw_b * ev[2] / denom
                        est_r += beta_r * cr
                        est_g += beta_g * cg
                        est_b += beta_b * cb
                        if n_rec == 1:
                            d0p_r = cr
                            d0p_g = cg
                            d0p_b = cb
                        if mode == MODE_FILL:
                            row = rec_offset + n_rec - 1
                            rec[11][row, 0] = fw_r * ev[0]
                            rec[11][row, 1] = fw_g * ev[1]
                            rec[11][row, 2] = fw_b * ev[2]
                            stack_dbar[n_rec - 1, 0] += cr
                            stack_dbar[n_rec - 1, 1] += cg
                            stack_dbar[n_rec - 1, 2] += cb
                break
            if mat == 1:  # black absorber
                break
            if not allow_record or n_rec >= max_depth:
                break
            gx, gy, gz = surface_normal_at(surf[0], surf[1], sid, vx, vy, vz)
            if gx * dx + gy * dy + gz * dz > 0.0:
                gx = -gx
                gy = -gy
                gz = -gz
            nx, ny, nz = gx, gy, gz
            alb = surf[3][sid]
            kr = alb[0]
            kg = alb[1]
            kb = alb[2]
            class_id = sid

        # --- create record n_rec at vertex v ---
        wc_r = fw_r * rr_inv
        wc_g = fw_g * rr_inv
        wc_b = fw_b * rr_inv
        if from_camera:
            camw_r = wc_r
            camw_g = wc_g
            camw_b = wc_b
            beta_r = wc_r
            beta_g = wc_g
            beta_b = wc_b
        else:
            beta_r *= (ext_fs_r / ext_pdf) * wc_r
            beta_g *= (ext_fs_g / ext_pdf) * wc_g
            beta_b *= (ext_fs_b / ext_pdf) * wc_b

        # arrival travel direction doubles as the phase anchor
        ax = dx
        ay = dy
        az = dz

        # NEE
        state, wex, wey, wez, pdf_e, e_delta, de_r, de_g, de_b = sample_emitter_core(
            surf, em, med, vx, vy, vz, state
        )
        if is_volume_vertex:
            rho_e = hg_pdf_nb(ax * wex + ay * wey + az * wez, gpar)
            p_p_at_e = rho_e
        else:
            cos_e = max(0.0, nx * wex + ny * wey + nz * wez)
            rho_e = cos_e * INV_PI
            p_p_at_e = rho_e
        fe_r = kr * rho_e
        fe_g = kg * rho_e
        fe_b = kb * rho_e
        if e_delta:
            cn_r = fe_r * de_r
            cn_g = fe_g * de_g
            cn_b = fe_b * de_b
        else:
            denom = pdf_e + p_p_at_e
            cn_r = fe_r * de_r / denom
            cn_g = fe_g * de_g / denom
            cn_b = fe_b * de_b / denom
        est_r += beta_r * cn_r
        est_g += beta_g * cn_g
        est_b += beta_b * cn_b
        if n_rec == 0:
            d0n_r = cn_r
            d0n_g = cn_g
            d0n_b = cn_b

        # phase / BSDF sample
        state, u1 = next_f64(state)
        state, u2 = next_f64(state)
        if is_volume_vertex:
            wpx, wpy, wpz, _ = hg_sample_dir(gpar, ax, ay, az, u1, u2)
            rho_p = hg_pdf_nb(ax * wpx + ay * wpy + az * wpz, gpar)
            pdf_p = rho_p
        else:
            wpx, wpy, wpz, _ = cosine_sample_dir(nx, ny, nz, u1, u2)
            cos_p = max(0.0, nx * wpx + ny * wpy + nz * wpz)
            rho_p = cos_p * INV_PI
            pdf_p = rho_p
        fp_r = kr * rho_p
        fp_g = kg * rho_p
        fp_b = kb * rho_p

        if mode == MODE_FILL:
            row = rec_offset + n_rec
            rec[0][row, 0] = vx
            rec[0][row, 1] = vy
            rec[0][row, 2] = vz
            rec[1][row, 0] = -ax
            rec[1][row, 1] = -ay
            rec[1][row, 2] = -az
            rec[2][row, 0] = nx
            rec[2][row, 1] = ny
            rec[2][row, 2] = nz
            rec[3][row, 0] = kr
            rec[3][row, 1] = kg
            rec[3][row, 2] = kb
            rec[4][row] = gpar
            rec[5][row, 0] = wpx
            rec[5][row, 1] = wpy
            rec[5][row, 2] = wpz
            rec[6][row] = pdf_p
            rec[8][row, 0] = wex
            rec[8][row, 1] = wey
            rec[8][row, 2] = wez
            rec[9][row] = pdf_e
            rec[10][row, 0] = de_r
            rec[10][row, 1] = de_g
            rec[10][row, 2] = de_b
            rec[14][row] = 1 if not is_volume_vertex else 0
            rec[15][row] = 1 if e_delta else 0
            rec[16][row] = class_id
            rec[17][row] = path_id
            rec[18][row] = n_rec
            rec[13][row, 0] = wc_r
            rec[13][row, 1] = wc_g
            rec[13][row, 2] = wc_b
            stack_dbar[n_rec, 0] = cn_r
            stack_dbar[n_rec, 1] = cn_g
            stack_dbar[n_rec, 2] = cn_b
            stack_fp[n_rec, 0] = fp_r / pdf_p if pdf_p > 0.0 else 0.0
            stack_fp[n_rec, 1] = fp_g / pdf_p if pdf_p > 0.0 else 0.0
            stack_fp[n_rec, 2] = fp_b / pdf_p if pdf_p > 0.0 else 0.0
            stack_wc[n_rec, 0] = wc_r
            stack_wc[n_rec, 1] = wc_g
            stack_wc[n_rec, 2] = wc_b

        n_rec += 1

        if pdf_p <= 0.0:
            break  # degenerate grazing BSDF sample; no continuation

        # Russian roulette on the continuation's indirect part; the phase
        # ray is still traced for the direct MIS term either way.
        rr_inv = 1.0
        allow_record = True
        if n_rec >= rr_start:
            tp_r = beta_r * fp_r / pdf_p
            tp_g = beta_g * fp_g / pdf_p
            tp_b = beta_b * fp_b / pdf_p
            q = (tp_r + tp_g + tp_b) / 3.0
            if q > 1.0:
                q = 1.0
            if q < rr_floor:
                q = rr_floor
            state, u = next_f64(state)
            if u >= q:
                allow_record = False
            else:
                rr_inv = 1.0 / q

        ext_fs_r = fp_r
        ext_fs_g = fp_g
        ext_fs_b = fp_b
        ext_pdf = pdf_p
        from_camera = False
        if is_volume_vertex:
            ox = vx
            oy = vy
            oz = vz
        else:
            ox = vx + wpx * SURF_OFFSET_EPS
            oy = vy + wpy * SURF_OFFSET_EPS
            oz = vz + wpz * SURF_OFFSET_EPS
        dx = wpx
        dy = wpy
        dz = wpz

    # --- backward sweep: recorded incoming-indirect estimates ---
    if mode == MODE_FILL and n_rec > 0:
        ir = 0.0
        ig = 0.0
        ib = 0.0
        for k in range(n_rec - 1, -1, -1):
            row = rec_offset + k
            rec[12][row, 0] = ir
            rec[12][row, 1] = ig
            rec[12][row, 2] = ib
            lb_r = stack_dbar[k, 0] + stack_fp[k, 0] * ir
            lb_g = stack_dbar[k, 1] + stack_fp[k, 1] * ig
            lb_b = stack_dbar[k, 2] + stack_fp[k, 2] * ib
            ir = stack_wc[k, 0] * lb_r
            ig = stack_wc[k, 1] * lb_g
            ib = stack_wc[k, 2] * lb_b

    if mode != MODE_OFF:
        pth[0][slot, 0] = camw_r
        pth[0][slot, 1] = camw_g
        pth[0][slot, 2] = camw_b
        pth[1][slot, 0] = dcam_r
        pth[1][slot, 1] = dcam_g
        pth[1][slot, 2] = dcam_b
        pth[2][slot, 0] = d0n_r + d0p_r
        pth[2][slot, 1] = d0n_g + d0p_g
        pth[2][slot, 2] = d0n_b + d0p_b
        pth[3][slot, 0] = d0n_r
        pth[3][slot, 1] = d0n_g
        pth[3][slot, 2] = d0n_b
        pth[4][slot, 0] = d0p_r
        pth[4][slot, 1] = d0p_g
        pth[4][slot, 2] = d0p_b
        pth[5][slot, 0] = est_r
        pth[5][slot, 1] = est_g
        pth[5][slot, 2] = est_b

    return n_rec, est_r, est_g, est_b


@njit(cache=True, parallel=True)
def render_image_kernel(
    surf, em, med, cam, width, height, spp, seed,
    max_depth, rr_start, rr_floor, image,
):
    """Record-free render: per-pixel mean of PT estimates."""
    rec = _dummy_rec()
    pth = _dummy_pth()
    npix = width * height
    for pix in prange(npix):
        x = pix % width
        y = pix // width
        acc_r = 0.0
        acc_g = 0.0
        acc_b = 0.0
        for s in range(spp):
            path_id = pix * spp + s
            _, er, eg, eb = trace_one(
                surf, em, med, cam, x, y, path_id, seed,
                max_depth, rr_start, rr_floor,
                MODE_OFF, 0, rec, pth, 0,
            )
            acc_r += er
            acc_g += eg
            acc_b += eb
        image[y, x, 0] = acc_r / spp
        image[y, x, 1] = acc_g / spp
        image[y, x, 2] = acc_b / spp


@njit(cache=True, parallel=True)
def count_records_kernel(
    surf, em, med, cam, width, height, spp, seed,
    max_depth, rr_start, rr_floor, counts, pth,
):
    rec = _dummy_rec()
    n_paths = width * height * spp
    for path_id in prange(n_paths):
        pix = path_id // spp
        x = pix % width
        y = pix // width
        n_rec, _, _, _ = trace_one(
            surf, em, med, cam, x, y, path_id, seed,
            max_depth, rr_start, rr_floor,
            MODE_COUNT, 0, rec, pth, path_id,
        )
        counts[path_id] = n_rec


@njit(cache=True, parallel=True)
def fill_records_kernel(
    surf, em, med, cam, width, height, spp, seed,
    max_depth, rr_start, rr_floor, offsets, rec, pth,
):
    n_paths = width * height * spp
    for path_id in prange(n_paths):
        pix = path_id // spp
        x = pix % width
        y = pix // width
        trace_one(
            surf, em, med, cam, x, y, path_id, seed,
            max_depth, rr_start, rr_floor,
            MODE_FILL, offsets[path_id], rec, pth, path_id,
        )


@njit(cache=True, parallel=True)
def extra_direct_kernel(
    surf, em, med, seed, n_extra,
    rec_start, rec_count,
    r_pos, r_omega_out, r_normal, r_coeff, r_g, r_kind,
    direct0_nee, direct0_phase, out,
):
    """Average n_extra additional NEE estimates into FirstBounceDirect."""
    n_paths = rec_start.shape[0]
    for p in prange(n_paths):
        if rec_count[p] == 0:
            out[p, 0] = 0.0
            out[p, 1] = 0.0
            out[p, 2] = 0.0
            continue
        r0 = rec_start[p]
        vx = r_pos[r0, 0]
        vy = r_pos[r0, 1]
        vz = r_pos[r0, 2]
        ax = -r_omega_out[r0, 0]
        ay = -r_omega_out[r0, 1]
        az = -r_omega_out[r0, 2]
        nx = r_normal[r0, 0]
        ny = r_normal[r0, 1]
        nz = r_normal[r0, 2]
        kr = r_coeff[r0, 0]
        kg = r_coeff[r0, 1]
        kb = r_coeff[r0, 2]
        gpar = r_g[r0]
        is_volume = r_kind[r0] == 0
        acc_r = direct0_nee[p, 0]
        acc_g = direct0_nee[p, 1]
        acc_b = direct0_nee[p, 2]
        state = make_stream(seed, p, SALT_EXTRA_DIRECT)
        for _ in range(n_extra):
            state, wex, wey, wez, pdf_e, e_delta, de_r, de_g, de_b = sample_emitter_core(
                surf, em, med, vx, vy, vz, state
            )
            if is_volume:
                rho_e = hg_pdf_nb(ax * wex + ay * wey + az * wez, gpar)
            else:
                rho_e = max(0.0, nx * wex + ny * wey + nz * wez) * INV_PI
            if e_delta:
                acc_r += kr * rho_e * de_r
                acc_g += kg * rho_e * de_g
                acc_b += kb * rho_e * de_b
            else:
                denom = pdf_e + rho_e
                acc_r += kr * rho_e * de_r / denom
                acc_g += kg * rho_e * de_g / denom
                acc_b += kb * rho_e * de_b / denom
        inv = 1.0 / (1.0 + n_extra)
        out[p, 0] = acc_r * inv + direct0_phase[p, 0]
        out[p, 1] = acc_g * inv + direct0_phase[p, 1]
        out[p, 2] = acc_b * inv + direct0_phase[p, 2]


@njit(cache=True)
def _dummy_rec():
    f1 = np.zeros((1, 3))
    s1 = np.zeros(1)
    return (
        f1, f1, f1, f1, s1, f1, s1, s1, f1, s1, f1, f1, f1, f1,
        np.zeros(1, dtype=np.uint8), np.zeros(1, dtype=np.uint8),
        np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int64),
        np.zeros(1, dtype=np.int32),
    )


@njit(cache=True)
def _dummy_pth():
    f1 = np.zeros((1, 3))
    return (f1, f1, f1, f1, f1, f1)
