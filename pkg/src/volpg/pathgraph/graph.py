"""Path graph construction: clusters, marginal densities, cached operators.

Cluster members act as sampling strategies for one another; the marginal
density of a sample direction is the sum of its pdf under every member's
strategy (balance heuristic denominator). Direct samples additionally add
K times the emitter-strategy pdf, K being the actual member count: each
point contributes one emitter sample and one phase sample, giving 2K
samples from K+1 strategies per cluster.

All per-cluster quantities are computed batched over clusters of equal
(size, kind), two passes per cluster and linear in K per sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from volpg.pathgraph.clustering import Cluster, cluster_points
from volpg.scenecore.phase import hg_pdf
from volpg.transport.records import KIND_VOLUME, PathSoA, RecordSoA, TraceOutput

INV_PI = 1.0 / np.pi


@dataclass
class PathGraph:
    records: RecordSoA
    paths: PathSoA
    width: int
    height: int
    spp: int
    next_idx: np.ndarray  # continuation child per record, -1 at path ends
    clusters: list[Cluster] = field(default_factory=list)
    # cached marginal densities (per record sample)
    phat_ind: Optional[np.ndarray] = None         # phase dirs, indirect form
    phat_dir_phase: Optional[np.ndarray] = None   # phase dirs, direct form
    phat_dir_emit: Optional[np.ndarray] = None    # emitter dirs, direct form
    included_phase: Optional[np.ndarray] = None
    included_emit: Optional[np.ndarray] = None
    # cached operators
    w_indirect: Optional[sp.csr_matrix] = None    # scalar kernel of A+ (rows lack coeff)
    d_bar: Optional[np.ndarray] = None            # aggregated direct per record

    @property
    def n_records(self) -> int:
        return self.records.n

    def cluster_of(self, record_index: int) -> Cluster:
        return self.clusters[int(self.records.cluster_id[record_index])]


def build_graph(out: TraceOutput, cluster_size: int, seed: int = 0) -> PathGraph:
    """Cluster the records and cache marginals and aggregation operators."""
    records, paths = out.records, out.paths
    class_keys = records.kind.astype(np.int64) * (1 << 32) + records.class_id.astype(np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0xC1A5]))
    cluster_id, clusters = cluster_points(records.pos, class_keys, cluster_size, rng)
    records.cluster_id = cluster_id
    graph = PathGraph(
        records=records, paths=paths, width=out.width, height=out.height, spp=out.spp,
        next_idx=records.next_index(), clusters=clusters,
    )
    compute_marginals(graph)
    _build_operators(graph)
    return graph


def _size_buckets(graph: PathGraph):
    """Group clusters by (member count, kind) and stack member rows."""
    buckets: dict[tuple[int, int], list[np.ndarray]] = {}
    kind = graph.records.kind
    for cl in graph.clusters:
        key = (cl.members.shape[0], int(kind[cl.members[0]]))
        buckets.setdefault(key, []).append(cl.members)
    return {key: np.stack(rows) for key, rows in buckets.items()}


def _pairwise_strategy_pdfs(records: RecordSoA, members: np.ndarray, kind: int, dirs: np.ndarray):
    """pdfs[n, l, j]: member l's strategy density at member j's direction."""
    if kind == KIND_VOLUME:
        anchors = -records.omega_out[members]          # (n, s, 3)
        cos = np.einsum("nld,njd->nlj", anchors, dirs)
        g = records.g[members][:, :, None]
        return hg_pdf(cos, g)
    normals = records.normal[members]
    cos = np.einsum("nld,njd->nlj", normals, dirs)
    return np.maximum(0.0, cos) * INV_PI


def compute_marginals(graph: PathGraph) -> None:
    """First pass over every cluster: cache p-hat for all member samples.

    Delta emitter samples keep the folded handling (their phase terms are
    excluded and the marginal reduces to the K-fold emitter strategy, so
    their stored p-hat is the member count). Samples whose marginal
    vanishes or is non-finite are flagged excluded.
    """
    r = graph.records
    n = r.n
    graph.phat_ind = np.zeros(n)
    graph.phat_dir_phase = np.zeros(n)
    graph.phat_dir_emit = np.zeros(n)
    for (size, kind), members in _size_buckets(graph).items():
        k = float(size)
        pd = _pairwise_strategy_pdfs(r, members, kind, r.phase_dir[members])
        phat_ind = pd.sum(axis=1)
        graph.phat_ind[members] = phat_ind
        graph.phat_dir_phase[members] = phat_ind + k * r.pdf_emit_at_phase[members]
        pe = _pairwise_strategy_pdfs(r, members, kind, r.emit_dir[members])
        graph.phat_dir_emit[members] = pe.sum(axis=1) + k * r.pdf_emit[members]
        delta = r.emit_delta[members].astype(bool)
        sized = np.full(members.shape, k)
        graph.phat_dir_emit[members[delta]] = sized[delta]

    graph.included_phase = np.isfinite(graph.phat_ind) & (graph.phat_ind > 0.0)
    graph.included_emit = np.isfinite(graph.phat_dir_emit) & (graph.phat_dir_emit > 0.0)


def _build_operators(graph: PathGraph) -> None:
    """Second pass: assemble the indirect kernel matrix and aggregate direct.

    The indirect operator A+ factors as diag(coeff) times a scalar kernel
    (phase density over marginal, nonzero inside clusters only); the
    scalar part is cached sparse, the spectral row factor applied on the
    fly. The direct aggregation is constant through the iteration and is
    evaluated here once.
    """
    r = graph.records
    n = r.n
    rows_all = []
    cols_all = []
    vals_all = []
    d_bar = np.zeros((n, 3))
    for (size, kind), members in _size_buckets(graph).items():
        k = float(size)
        pd = _pairwise_strategy_pdfs(r, members, kind, r.phase_dir[members])

        denom_ind = graph.phat_ind[members]
        ok_p = graph.included_phase[members]
        w_ind = np.where(
            ok_p[:, None, :], pd / np.where(denom_ind > 0, denom_ind, 1.0)[:, None, :], 0.0
        )
        rows_all.append(np.broadcast_to(members[:, :, None], pd.shape).ravel())
        cols_all.append(np.broadcast_to(members[:, None, :], pd.shape).ravel())
        vals_all.append(w_ind.ravel())

        # direct aggregation: emitter samples + phase samples, interleaved columns
        pe = _pairwise_strategy_pdfs(r, members, kind, r.emit_dir[members])
        denom_e = graph.phat_dir_emit[members]
        ok_e = graph.included_emit[members]
        w_e = np.where(ok_e[:, None, :], pe / np.where(denom_e > 0, denom_e, 1.0)[:, None, :], 0.0)
        denom_p = graph.phat_dir_phase[members]
        ok_dp = ok_p & np.isfinite(denom_p) & (denom_p > 0.0)
        w_p = np.where(ok_dp[:, None, :], pd / np.where(denom_p > 0, denom_p, 1.0)[:, None, :], 0.0)
        contrib = np.einsum("nrj,njc->nrc", w_e, r.d_emit[members]) + np.einsum(
            "nrj,njc->nrc", w_p, r.d_phase[members]
        )
        d_bar[members.ravel()] = (r.coeff[members] * contrib).reshape(-1, 3)

    rows = np.concatenate(rows_all) if rows_all else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols_all) if cols_all else np.zeros(0, dtype=np.int64)
    vals = np.concatenate(vals_all) if vals_all else np.zeros(0)
    graph.w_indirect = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    graph.d_bar = d_bar
