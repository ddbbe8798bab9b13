"""Fixed-point solve of the refined-radiance system and final image splat.

The incoming-indirect vector starts from the path-traced estimates (the
image is at the right energy level from iteration one) and is updated by
I <- P A+ I + P Ao D until the relative change stalls below tol or the
iteration budget runs out. The direct term P Ao D is constant and
evaluated once. Residuals are tracked per iteration; sustained growth
aborts, since a contraction failure signals inconsistent recorded
pdfs/weights rather than bad luck.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from volpg.pathgraph.graph import PathGraph
from volpg.pathgraph.operators import (
    aggregate_direct,
    aggregate_indirect,
    propagate_linear,
)
from volpg.scenecore.phase import hg_pdf


class SolveDivergence(RuntimeError):
    pass


@dataclass
class SolveResult:
    incoming: np.ndarray     # refined I per record
    i_bar: np.ndarray        # scattered-indirect estimate used by the splat
    d_bar: np.ndarray        # aggregated direct per record
    residuals: list = field(default_factory=list)
    iterations: int = 0


def _own_indirect(graph: PathGraph, incoming: np.ndarray) -> np.ndarray:
    """Single-strategy I-bar: each record's own sample only (the PT form)."""
    r = graph.records
    if r.n == 0:
        return np.zeros((0, 3))
    cos = np.einsum("nd,nd->n", -r.omega_out, r.phase_dir)
    rho_vol = hg_pdf(cos, r.g)
    cos_s = np.maximum(0.0, np.einsum("nd,nd->n", r.normal, r.phase_dir))
    rho = np.where(r.kind == 0, rho_vol, cos_s / np.pi)
    ratio = np.where(r.pdf_phase > 0.0, rho / np.where(r.pdf_phase > 0.0, r.pdf_phase, 1.0), 0.0)
    return r.coeff * ratio[:, None] * incoming


def residual_norm(new: np.ndarray, old: np.ndarray) -> float:
    """Max-norm change relative to the vector's own max-norm, per channel."""
    worst = 0.0
    for c in range(3):
        scale = max(float(np.max(np.abs(new[:, c]), initial=0.0)), 1e-12)
        delta = float(np.max(np.abs(new[:, c] - old[:, c]), initial=0.0))
        worst = max(worst, delta / scale)
    return worst


def solve(graph: PathGraph, iterations: int = 10, tol: float = 1e-3) -> SolveResult:
    """Iterate to the fixed point; returns the final I and per-iteration residuals."""
    d_bar = aggregate_direct(graph)
    const = propagate_linear(graph, d_bar)
    terminal = graph.next_idx < 0
    term_vec = np.where(terminal[:, None], graph.records.i_pt, 0.0)
    base = const + term_vec

    incoming = graph.records.i_pt.copy()
    i_bar = _own_indirect(graph, incoming)
    residuals: list[float] = []
    performed = 0
    grow = 0
    for _ in range(iterations):
        i_bar = aggregate_indirect(graph, incoming)
        new = propagate_linear(graph, i_bar) + base
        res = residual_norm(new, incoming)
        residuals.append(res)
        incoming = new
        performed += 1
        if len(residuals) >= 2 and res > residuals[-2]:
            grow += 1
            if grow >= 3:
                raise SolveDivergence(
                    "fixed-point residuals grew over 3 consecutive iterations "
                    f"({residuals[-4:]}); recorded pdfs/weights are inconsistent"
                )
        else:
            grow = 0
        if res < tol:
            break
    return SolveResult(
        incoming=incoming, i_bar=i_bar, d_bar=d_bar,
        residuals=residuals, iterations=performed,
    )


def splat_output(
    graph: PathGraph,
    result: SolveResult,
    aggregate_direct_term: bool = False,
    extra_direct: bool = False,
) -> np.ndarray:
    """Write refined per-path radiance into the image.

    Per path: pixel value = camera-visible emission + camera weight times
    (direct term + refined scattered-indirect at the first shading point).
    The direct term defaults to the path's own PT estimate (aggregated
    direct correlates neighboring pixels), optionally the extra-sample
    FirstBounceDirect, or the aggregated direct when explicitly requested.
    """
    p = graph.paths
    npix = graph.width * graph.height
    spp = graph.spp
    vals = p.d_cam.copy()
    has_rec = p.rec_count > 0
    r0 = p.rec_start[has_rec]
    if aggregate_direct_term:
        direct = result.d_bar[r0]
    elif extra_direct:
        direct = p.extra_direct[has_rec]
    else:
        direct = p.direct0[has_rec]
    vals[has_rec] += p.cam_weight[has_rec] * (direct + result.i_bar[r0])
    acc = np.zeros((npix, 3))
    per_sample = vals.reshape(npix, spp, 3)
    for s in range(spp):
        acc += per_sample[:, s]
    return (acc / spp).reshape(graph.height, graph.width, 3)


def write_residual_csv(path, residuals) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "residual"])
        for i, r in enumerate(residuals, start=1):
            writer.writerow([i, repr(float(r))])
