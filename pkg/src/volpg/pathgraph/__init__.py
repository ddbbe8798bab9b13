from volpg.pathgraph.clustering import Cluster, cluster_points
from volpg.pathgraph.graph import PathGraph, build_graph, compute_marginals
from volpg.pathgraph.operators import aggregate_direct, aggregate_indirect, propagate
from volpg.pathgraph.solve import SolveDivergence, SolveResult, solve, splat_output
from volpg.pathgraph.pipeline import render_pg

__all__ = [
    "Cluster",
    "cluster_points",
    "PathGraph",
    "build_graph",
    "compute_marginals",
    "aggregate_direct",
    "aggregate_indirect",
    "propagate",
    "SolveDivergence",
    "SolveResult",
    "solve",
    "splat_output",
    "render_pg",
]
