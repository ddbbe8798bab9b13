"""Matrix-free aggregation and propagation operators.

aggregate_indirect applies one block-row of A+ per record: the MIS
recombination of the cluster's incoming-indirect samples into a refined
scattered estimate. aggregate_direct is the analogous 2K-sample direct
form (cached at build time, constant through the iteration). propagate
moves refined scattered radiance backward along continuation edges,
scaled by the recorded transmittance-over-pdf weight; records without a
continuation child keep their path-traced incoming value.
"""

import numpy as np

from volpg.pathgraph.graph import PathGraph


def aggregate_indirect(graph: PathGraph, incoming: np.ndarray) -> np.ndarray:
    """I-bar per record: spectral row factor times the cached scalar kernel."""
    return graph.records.coeff * (graph.w_indirect @ incoming)


def aggregate_direct(graph: PathGraph) -> np.ndarray:
    """D-bar per record (computed once at graph build)."""
    return graph.d_bar


def propagate(graph: PathGraph, l_bar: np.ndarray) -> np.ndarray:
    """Incoming indirect per record from its continuation child.

    I(x_{i-1}) = w_cont(x_i) * L_bar(x_i); terminal records (no child)
    keep their original path-traced incoming value.
    """
    r = graph.records
    out = r.i_pt.copy()
    has_child = graph.next_idx >= 0
    child = graph.next_idx[has_child]
    out[has_child] = r.w_cont[child] * l_bar[child]
    return out


def propagate_linear(graph: PathGraph, l_bar: np.ndarray) -> np.ndarray:
    """The strictly linear part of propagate (zero at terminal records)."""
    out = np.zeros_like(l_bar)
    has_child = graph.next_idx >= 0
    child = graph.next_idx[has_child]
    out[has_child] = graph.records.w_cont[child] * l_bar[child]
    return out
