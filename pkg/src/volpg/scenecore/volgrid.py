"""Raw binary volume grid I/O.

Layout: 16-byte header (magic "VOLG", three 32-bit little-endian dims),
then dims.x * dims.y * dims.z 32-bit little-endian floats, x-fastest.
Arrays are exchanged as (z, y, x)-indexed float32, matching the x-fastest
flattening.
"""

import struct

import numpy as np

MAGIC = b"VOLG"


class VolumeGridError(IOError):
    pass


def write_volume_grid(path, density: np.ndarray) -> None:
    d = np.ascontiguousarray(density, dtype="<f4")
    if d.ndim != 3:
        raise VolumeGridError(f"density must be 3D, got shape {d.shape}")
    nz, ny, nx = d.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", nx, ny, nz))
        f.write(d.tobytes())


def read_volume_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise VolumeGridError(f"{path}: not a VOLG volume file")
        nx, ny, nz = struct.unpack("<III", header[4:])
        count = nx * ny * nz
        data = np.frombuffer(f.read(4 * count), dtype="<f4")
        if data.size != count:
            raise VolumeGridError(f"{path}: truncated volume data")
    return data.reshape(nz, ny, nx).copy()
