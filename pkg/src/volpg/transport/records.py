"""Shading-point records and the per-path table, stored structure-of-arrays.

One record per scatter/surface event; a path of depth d yields exactly d
records, contiguous and depth-ordered, paths in pixel order. The arrays
hold every quantity the path graph needs: sample directions with their
pdfs, raw (un-MIS'd) incoming direct radiance for both strategies, the
path-traced incoming indirect estimate, and the transmittance-over-pdf
continuation weight (divided by any Russian-roulette survival).

`save_records`/`load_records` give the versioned "VPGR" binary dump so
graph solving is testable on canned inputs without re-tracing.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

VPGR_MAGIC = b"VPGR"
VPGR_VERSION = 1

KIND_VOLUME = 0
KIND_SURFACE = 1

RECORD_DTYPE = np.dtype(
    [
        ("pos", "<f8", 3),
        ("omega_out", "<f8", 3),       # toward the previous vertex / camera
        ("normal", "<f8", 3),          # oriented shading normal (surface records)
        ("coeff", "<f8", 3),           # sigma_s(x) for volume, albedo for surface
        ("g", "<f8"),
        ("phase_dir", "<f8", 3),       # omega_j
        ("pdf_phase", "<f8"),          # p_P(q_x, omega_j)
        ("pdf_emit_at_phase", "<f8"),  # p_E(omega_j) at x
        ("emit_dir", "<f8", 3),        # omega_j^e
        ("pdf_emit", "<f8"),           # p_E(omega_j^e) at x (1 for delta-folded)
        ("d_emit", "<f8", 3),          # D(x, omega_j^e), raw
        ("d_phase", "<f8", 3),         # D(x, omega_j), raw
        ("i_pt", "<f8", 3),            # I(x, omega_j): PT indirect along the continuation
        ("w_cont", "<f8", 3),          # Tr/p_t of the segment arriving here (/ RR survival)
        ("kind", "<u1"),
        ("emit_delta", "<u1"),
        ("class_id", "<i4"),           # medium index (volume) or surface index (surface)
        ("path_idx", "<i8"),
        ("depth", "<i4"),
    ]
)

PATH_DTYPE = np.dtype(
    [
        ("pixel_idx", "<i8"),
        ("rec_start", "<i8"),
        ("rec_count", "<i4"),
        ("cam_weight", "<f8", 3),      # Tr/p of the camera->x0 segment
        ("d_cam", "<f8", 3),           # emitted radiance seen directly by the camera ray
        ("direct0", "<f8", 3),         # PT MIS'd direct estimate at x0
        ("direct0_nee", "<f8", 3),
        ("direct0_phase", "<f8", 3),
        ("extra_direct", "<f8", 3),    # FirstBounceDirect (== direct0 when n_extra = 0)
        ("pt_estimate", "<f8", 3),
    ]
)

_REC_FIELDS = [
    ("pos", (3,)), ("omega_out", (3,)), ("normal", (3,)), ("coeff", (3,)),
    ("g", ()), ("phase_dir", (3,)), ("pdf_phase", ()), ("pdf_emit_at_phase", ()),
    ("emit_dir", (3,)), ("pdf_emit", ()), ("d_emit", (3,)), ("d_phase", (3,)),
    ("i_pt", (3,)), ("w_cont", (3,)),
]


@dataclass
class RecordSoA:
    pos: np.ndarray
    omega_out: np.ndarray
    normal: np.ndarray
    coeff: np.ndarray
    g: np.ndarray
    phase_dir: np.ndarray
    pdf_phase: np.ndarray
    pdf_emit_at_phase: np.ndarray
    emit_dir: np.ndarray
    pdf_emit: np.ndarray
    d_emit: np.ndarray
    d_phase: np.ndarray
    i_pt: np.ndarray
    w_cont: np.ndarray
    kind: np.ndarray
    emit_delta: np.ndarray
    class_id: np.ndarray
    path_idx: np.ndarray
    depth: np.ndarray
    cluster_id: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.cluster_id is None:
            self.cluster_id = np.full(self.n, -1, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    @classmethod
    def empty(cls, n: int) -> "RecordSoA":
        return cls(
            pos=np.zeros((n, 3)), omega_out=np.zeros((n, 3)), normal=np.zeros((n, 3)),
            coeff=np.zeros((n, 3)), g=np.zeros(n), phase_dir=np.zeros((n, 3)),
            pdf_phase=np.zeros(n), pdf_emit_at_phase=np.zeros(n),
            emit_dir=np.zeros((n, 3)), pdf_emit=np.zeros(n),
            d_emit=np.zeros((n, 3)), d_phase=np.zeros((n, 3)),
            i_pt=np.zeros((n, 3)), w_cont=np.zeros((n, 3)),
            kind=np.zeros(n, dtype=np.uint8), emit_delta=np.zeros(n, dtype=np.uint8),
            class_id=np.zeros(n, dtype=np.int32), path_idx=np.zeros(n, dtype=np.int64),
            depth=np.zeros(n, dtype=np.int32),
        )

    def kernel_arrays(self):
        return (
            self.pos, self.omega_out, self.normal, self.coeff, self.g,
            self.phase_dir, self.pdf_phase, self.pdf_emit_at_phase,
            self.emit_dir, self.pdf_emit, self.d_emit, self.d_phase,
            self.i_pt, self.w_cont, self.kind, self.emit_delta,
            self.class_id, self.path_idx, self.depth,
        )

    def next_index(self) -> np.ndarray:
        """Index of the continuation child (depth + 1 on the same path), -1 at path ends.

        Records are contiguous per path in depth order, so the child of
        record r is r + 1 exactly when r + 1 shares the path index.
        """
        n = self.n
        nxt = np.full(n, -1, dtype=np.int64)
        if n > 1:
            same = self.path_idx[1:] == self.path_idx[:-1]
            idx = np.nonzero(same)[0]
            nxt[idx] = idx + 1
        return nxt


@dataclass
class PathSoA:
    pixel_idx: np.ndarray
    rec_start: np.ndarray
    rec_count: np.ndarray
    cam_weight: np.ndarray
    d_cam: np.ndarray
    direct0: np.ndarray
    direct0_nee: np.ndarray
    direct0_phase: np.ndarray
    extra_direct: np.ndarray
    pt_estimate: np.ndarray

    @property
    def n(self) -> int:
        return self.pixel_idx.shape[0]

    @classmethod
    def empty(cls, n: int) -> "PathSoA":
        return cls(
            pixel_idx=np.zeros(n, dtype=np.int64),
            rec_start=np.zeros(n, dtype=np.int64),
            rec_count=np.zeros(n, dtype=np.int32),
            cam_weight=np.zeros((n, 3)), d_cam=np.zeros((n, 3)),
            direct0=np.zeros((n, 3)), direct0_nee=np.zeros((n, 3)),
            direct0_phase=np.zeros((n, 3)), extra_direct=np.zeros((n, 3)),
            pt_estimate=np.zeros((n, 3)),
        )

    def kernel_arrays(self):
        return (
            self.cam_weight, self.d_cam, self.direct0, self.direct0_nee,
            self.direct0_phase, self.pt_estimate,
        )


@dataclass
class TraceOutput:
    """Everything one instrumented render produces."""

    image: np.ndarray
    records: RecordSoA
    paths: PathSoA
    width: int
    height: int
    spp: int


def save_records(path, out: TraceOutput) -> None:
    rec = np.zeros(out.records.n, dtype=RECORD_DTYPE)
    r = out.records
    for name, _ in _REC_FIELDS:
        rec[name] = getattr(r, name)
    rec["kind"] = r.kind
    rec["emit_delta"] = r.emit_delta
    rec["class_id"] = r.class_id
    rec["path_idx"] = r.path_idx
    rec["depth"] = r.depth

    pth = np.zeros(out.paths.n, dtype=PATH_DTYPE)
    p = out.paths
    for name in PATH_DTYPE.names:
        pth[name] = getattr(p, name)

    with open(path, "wb") as f:
        f.write(VPGR_MAGIC)
        f.write(
            struct.pack(
                "<IQQIII",
                VPGR_VERSION, out.records.n, out.paths.n,
                out.width, out.height, out.spp,
            )
        )
        f.write(rec.tobytes())
        f.write(pth.tobytes())


def load_records(path) -> TraceOutput:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != VPGR_MAGIC:
            raise IOError(f"{path}: not a VPGR record dump")
        version, n_rec, n_path, width, height, spp = struct.unpack("<IQQIII", f.read(32))
        if version != VPGR_VERSION:
            raise IOError(f"{path}: unsupported VPGR version {version}")
        rec = np.frombuffer(f.read(RECORD_DTYPE.itemsize * n_rec), dtype=RECORD_DTYPE)
        if rec.size != n_rec:
            raise IOError(f"{path}: truncated record block")
        pth = np.frombuffer(f.read(PATH_DTYPE.itemsize * n_path), dtype=PATH_DTYPE)
        if pth.size != n_path:
            raise IOError(f"{path}: truncated path block")

    records = RecordSoA(
        **{name: np.ascontiguousarray(rec[name], dtype=np.float64) for name, _ in _REC_FIELDS},
        kind=np.ascontiguousarray(rec["kind"]),
        emit_delta=np.ascontiguousarray(rec["emit_delta"]),
        class_id=np.ascontiguousarray(rec["class_id"]),
        path_idx=np.ascontiguousarray(rec["path_idx"]),
        depth=np.ascontiguousarray(rec["depth"]),
    )
    paths = PathSoA(
        pixel_idx=np.ascontiguousarray(pth["pixel_idx"]),
        rec_start=np.ascontiguousarray(pth["rec_start"]),
        rec_count=np.ascontiguousarray(pth["rec_count"]),
        **{
            name: np.ascontiguousarray(pth[name], dtype=np.float64)
            for name in (
                "cam_weight", "d_cam", "direct0", "direct0_nee",
                "direct0_phase", "extra_direct", "pt_estimate",
            )
        },
    )
    image = splat_pt_image(paths, width, height, spp)
    return TraceOutput(image, records, paths, width, height, spp)


def splat_pt_image(paths: PathSoA, width: int, height: int, spp: int) -> np.ndarray:
    """Average per-path PT estimates into pixels, in sample order."""
    est = paths.pt_estimate.reshape(height * width, spp, 3)
    acc = np.zeros((height * width, 3))
    for s in range(spp):
        acc += est[:, s]
    return (acc / spp).reshape(height, width, 3)
