from volpg.transport.records import PathSoA, RecordSoA, TraceOutput, load_records, save_records
from volpg.transport.tracer import record_extra_direct, render_pt, trace_path
from volpg.transport.reconstruct import reconstruct_path_estimate

__all__ = [
    "PathSoA",
    "RecordSoA",
    "TraceOutput",
    "load_records",
    "save_records",
    "record_extra_direct",
    "render_pt",
    "trace_path",
    "reconstruct_path_estimate",
]
