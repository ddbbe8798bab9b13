"""Explicitly materialized dense operators.

Reference route for the matrix-free solve: per channel, A+ (N x N), the
interleaved direct operator Ao (N x 2N, even columns emitter samples,
odd columns phase samples), and the propagation matrix P (N x N, one
entry per continuation edge). Only sensible for small graphs; the test
suite holds them to <= ~1000 records.
"""

import numpy as np

from volpg.pathgraph.graph import PathGraph
from volpg.scenecore.phase import hg_pdf
from volpg.transport.records import KIND_VOLUME

INV_PI = 1.0 / np.pi


def _rho(records, row: int, direction) -> float:
    if records.kind[row] == KIND_VOLUME:
        return float(hg_pdf(float(-(records.omega_out[row]) @ direction), records.g[row]))
    return max(0.0, float(records.normal[row] @ direction)) * INV_PI


def dense_operators(graph: PathGraph):
    """Returns (A_plus, A_o, P) with shapes (3,N,N), (3,N,2N), (3,N,N)."""
    r = graph.records
    n = r.n
    a_plus = np.zeros((3, n, n))
    a_o = np.zeros((3, n, 2 * n))
    p = np.zeros((3, n, n))
    for cl in graph.clusters:
        members = cl.members
        k = float(members.shape[0])
        for a in members:
            for b in members:
                if graph.included_phase[b]:
                    w = _rho(r, a, r.phase_dir[b]) / graph.phat_ind[b]
                    for c in range(3):
                        a_plus[c, a, b] = r.coeff[a, c] * w
                if graph.included_emit[b]:
                    we = _rho(r, a, r.emit_dir[b]) / graph.phat_dir_emit[b]
                    for c in range(3):
                        a_o[c, a, 2 * b] = r.coeff[a, c] * we
                if graph.included_phase[b] and graph.phat_dir_phase[b] > 0.0:
                    wp = _rho(r, a, r.phase_dir[b]) / graph.phat_dir_phase[b]
                    for c in range(3):
                        a_o[c, a, 2 * b + 1] = r.coeff[a, c] * wp
    for row in range(n):
        child = graph.next_idx[row]
        if child >= 0:
            for c in range(3):
                p[c, row, child] = r.w_cont[child, c]
    return a_plus, a_o, p


def dense_light_vector(graph: PathGraph) -> np.ndarray:
    """Interleaved incoming-direct vector (3, 2N): even emitter, odd phase."""
    r = graph.records
    n = r.n
    d = np.zeros((3, 2 * n))
    for c in range(3):
        d[c, 0::2] = r.d_emit[:, c]
        d[c, 1::2] = r.d_phase[:, c]
    return d


def dense_solve(graph: PathGraph, iterations: int):
    """Plain dense iteration of I <- P A+ I + P Ao D (terminal rows pinned).

    Returns (incoming, i_bar) matching SolveResult semantics.
    """
    a_plus, a_o, p = dense_operators(graph)
    d = dense_light_vector(graph)
    r = graph.records
    n = r.n
    terminal = graph.next_idx < 0
    incoming = r.i_pt.T.copy()  # (3, N)
    i_bar = np.zeros((3, n))
    const = np.stack([p[c] @ (a_o[c] @ d[c]) for c in range(3)])
    for _ in range(iterations):
        i_bar = np.stack([a_plus[c] @ incoming[c] for c in range(3)])
        incoming = np.stack([p[c] @ i_bar[c] for c in range(3)]) + const
        incoming[:, terminal] = r.i_pt.T[:, terminal]
    return incoming.T.copy(), i_bar.T.copy()
