"""End-to-end path-graph render: trace, build, solve, splat."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from volpg.harness.config import RenderConfig
from volpg.pathgraph.graph import PathGraph, build_graph
from volpg.pathgraph.solve import SolveResult, solve, splat_output, write_residual_csv
from volpg.scenecore.types import Scene
from volpg.transport.records import TraceOutput, save_records
from volpg.transport.tracer import record_extra_direct, render_pt


@dataclass
class PgRender:
    image: np.ndarray
    pt_image: np.ndarray
    graph: PathGraph
    result: SolveResult
    trace: TraceOutput


def render_pg(scene: Scene, config: RenderConfig) -> PgRender:
    """Instrumented trace plus graph refinement, honoring the config flags."""
    trace = render_pt(scene, config, with_records=True)
    if config.extra_direct_samples > 0:
        record_extra_direct(scene, trace, config.extra_direct_samples, seed=config.seed)
    if config.dump_records:
        save_records(config.dump_records, trace)
    graph = build_graph(trace, config.cluster_size, seed=config.seed)
    result = solve(graph, iterations=config.iterations, tol=config.tol)
    if config.residual_csv:
        write_residual_csv(config.residual_csv, result.residuals)
    image = splat_output(
        graph,
        result,
        aggregate_direct_term=config.aggregate_direct,
        extra_direct=config.extra_direct_samples > 0,
    )
    return PgRender(image=image, pt_image=trace.image, graph=graph, result=result, trace=trace)


def solve_from_records(
    trace: TraceOutput,
    cluster_size: int,
    iterations: int = 10,
    tol: float = 1e-3,
    seed: int = 0,
    aggregate_direct_term: bool = False,
    extra_direct: bool = False,
    residual_csv: Optional[str] = None,
):
    """Graph solve on an existing record set (e.g. a loaded VPGR dump)."""
    graph = build_graph(trace, cluster_size, seed=seed)
    result = solve(graph, iterations=iterations, tol=tol)
    if residual_csv:
        write_residual_csv(residual_csv, result.residuals)
    image = splat_output(
        graph, result,
        aggregate_direct_term=aggregate_direct_term, extra_direct=extra_direct,
    )
    return image, graph, result
