"""Recompute pixel contributions from records alone.

Independent numpy re-derivation of the transport the kernel accumulated
forward: if the records are complete and consistent, walking them
backward with the recorded pdfs, weights, and raw radiances reproduces
the PT pixel estimate. This is the load-bearing check that the path
graph sees the same transport the tracer computed.
"""

import numpy as np

from volpg.scenecore.phase import hg_pdf
from volpg.transport.records import KIND_VOLUME, PathSoA, RecordSoA

INV_PI = 1.0 / np.pi


def scatter_kernel(records: RecordSoA, row: int, direction) -> np.ndarray:
    """f_s(x, omega_out, direction): spectral scattered-radiance kernel."""
    d = np.asarray(direction)
    if records.kind[row] == KIND_VOLUME:
        anchor = -records.omega_out[row]
        rho = hg_pdf(float(anchor @ d), records.g[row])
    else:
        rho = max(0.0, float(records.normal[row] @ d)) * INV_PI
    return records.coeff[row] * rho


def phase_pdf_at(records: RecordSoA, row: int, direction) -> float:
    """p_P(q_x, direction) for the record's local strategy."""
    d = np.asarray(direction)
    if records.kind[row] == KIND_VOLUME:
        anchor = -records.omega_out[row]
        return float(hg_pdf(float(anchor @ d), records.g[row]))
    return max(0.0, float(records.normal[row] @ d)) * INV_PI


def local_direct_estimate(records: RecordSoA, row: int) -> np.ndarray:
    """PT MIS'd direct estimate at one record (NEE + phase strategies)."""
    f_e = scatter_kernel(records, row, records.emit_dir[row])
    if records.emit_delta[row]:
        nee = f_e * records.d_emit[row]
    else:
        denom = records.pdf_emit[row] + phase_pdf_at(records, row, records.emit_dir[row])
        nee = f_e * records.d_emit[row] / denom
    f_p = scatter_kernel(records, row, records.phase_dir[row])
    denom = records.pdf_phase[row] + records.pdf_emit_at_phase[row]
    phase = f_p * records.d_phase[row] / denom
    return nee + phase


def reconstruct_path_estimate(records: RecordSoA, paths: PathSoA, path_index: int):
    """Rebuild one path's pixel estimate from its records.

    Returns (estimate, max |stored i_pt - recomputed|). The stored
    incoming-indirect values are not consumed, only cross-checked.
    """
    start = int(paths.rec_start[path_index])
    count = int(paths.rec_count[path_index])
    incoming = np.zeros(3)
    max_ipt_diff = 0.0
    for k in range(count - 1, -1, -1):
        row = start + k
        max_ipt_diff = max(max_ipt_diff, float(np.abs(records.i_pt[row] - incoming).max()))
        dbar = local_direct_estimate(records, row)
        f_p = scatter_kernel(records, row, records.phase_dir[row])
        pdf_p = records.pdf_phase[row]
        ratio = f_p / pdf_p if pdf_p > 0.0 else np.zeros(3)
        lbar = dbar + ratio * incoming
        incoming = records.w_cont[row] * lbar
    estimate = paths.d_cam[path_index] + incoming
    return estimate, max_ipt_diff
