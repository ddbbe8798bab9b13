"""Python-facing tracing API over the njit kernels.

Record capture is two-pass: a counting pass sizes the structure-of-arrays
exactly, a fill pass replays the same rng streams into the allocated
arrays. `VOLPG_THREADS` caps the numba worker count; results are
independent of it because every path owns its own output slots.
"""

import os

import numba
import numpy as np

from volpg.harness.config import RenderConfig
from volpg.scenecore.flatten import flatten_scene
from volpg.scenecore.types import Scene
from volpg.transport.kernels import (
    MODE_COUNT,
    MODE_FILL,
    count_records_kernel,
    extra_direct_kernel,
    fill_records_kernel,
    render_image_kernel,
    trace_one,
    _dummy_pth,
    _dummy_rec,
)
from volpg.transport.records import PathSoA, RecordSoA, TraceOutput, splat_pt_image


def _apply_thread_cap():
    cap = os.environ.get("VOLPG_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


def render_pt(scene: Scene, config: RenderConfig, with_records: bool = False) -> TraceOutput:
    """Path-trace the scene; optionally retain the full record set.

    The image is the per-pixel mean of PT estimates and is bit-identical
    between the record-free and recording paths for a given seed.
    """
    _apply_thread_cap()
    data = flatten_scene(scene)
    width, height = data.width, data.height
    spp = config.spp
    seed = np.int64(config.seed)
    args = (
        data.surfaces, data.emitters, data.media, data.camera,
        width, height, spp, seed,
        config.max_depth, config.rr_start, config.rr_floor,
    )

    if not with_records:
        image = np.zeros((height, width, 3))
        render_image_kernel(*args, image)
        return TraceOutput(image, RecordSoA.empty(0), PathSoA.empty(0), width, height, spp)

    n_paths = width * height * spp
    paths = PathSoA.empty(n_paths)
    paths.pixel_idx[:] = np.arange(n_paths) // spp
    counts = np.zeros(n_paths, dtype=np.int64)
    count_records_kernel(*args, counts, paths.kernel_arrays())
    offsets = np.zeros(n_paths, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    paths.rec_start[:] = offsets
    paths.rec_count[:] = counts

    records = RecordSoA.empty(int(counts.sum()))
    fill_records_kernel(*args, offsets, records.kernel_arrays(), paths.kernel_arrays())
    paths.extra_direct[:] = paths.direct0

    image = splat_pt_image(paths, width, height, spp)
    return TraceOutput(image, records, paths, width, height, spp)


def trace_path(scene: Scene, pixel, config: RenderConfig, sample: int = 0):
    """Trace a single camera path and return its records and path row.

    The stream is the one the full render would use for (pixel, sample),
    so single-path results match the corresponding render exactly.
    """
    _apply_thread_cap()
    data = flatten_scene(scene)
    px, py = int(pixel[0]), int(pixel[1])
    if not (0 <= px < data.width and 0 <= py < data.height):
        raise ValueError(f"pixel {pixel} outside resolution {(data.width, data.height)}")
    path_id = (py * data.width + px) * config.spp + sample
    seed = np.int64(config.seed)
    base = (
        data.surfaces, data.emitters, data.media, data.camera,
        px, py, path_id, seed,
        config.max_depth, config.rr_start, config.rr_floor,
    )
    n_rec, _, _, _ = trace_one(*base, MODE_COUNT, 0, _dummy_rec(), _dummy_pth(), 0)
    records = RecordSoA.empty(n_rec)
    paths = PathSoA.empty(1)
    paths.pixel_idx[0] = py * data.width + px
    paths.rec_count[0] = n_rec
    trace_one(*base, MODE_FILL, 0, records.kernel_arrays(), paths.kernel_arrays(), 0)
    paths.extra_direct[:] = paths.direct0
    return records, paths


def record_extra_direct(scene: Scene, out: TraceOutput, n_extra: int, seed=None) -> np.ndarray:
    """Average n_extra additional first-bounce NEE samples into FirstBounceDirect.

    Used only when splatting output, never by aggregation. n_extra = 0
    leaves the original PT direct estimate in place.
    """
    if n_extra < 0:
        raise ValueError("n_extra must be >= 0")
    _apply_thread_cap()
    data = flatten_scene(scene)
    if n_extra == 0:
        out.paths.extra_direct[:] = out.paths.direct0
        return out.paths.extra_direct
    if seed is None:
        seed = 0
    r = out.records
    extra_direct_kernel(
        data.surfaces, data.emitters, data.media, np.int64(seed), n_extra,
        out.paths.rec_start, out.paths.rec_count,
        r.pos, r.omega_out, r.normal, r.coeff, r.g, r.kind,
        out.paths.direct0_nee, out.paths.direct0_phase, out.paths.extra_direct,
    )
    return out.paths.extra_direct
