"""PFM image I/O (color "PF", little-endian, bottom-to-top row order).

Images are (height, width, 3) float32 arrays with row 0 at the top; the
writer flips vertically to match the PFM convention. Round-trips are
bitwise lossless.
"""

import numpy as np


class PfmError(IOError):
    pass


def write_pfm(image: np.ndarray, path) -> None:
    img = np.asarray(image, dtype="<f4")
    if img.ndim != 3 or img.shape[2] != 3:
        raise PfmError(f"expected (h, w, 3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(b"PF\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic == b"Pf":
            raise PfmError(f"{path}: grayscale PFM is unsupported")
        if magic != b"PF":
            raise PfmError(f"{path}: not a PFM file (magic {magic!r})")
        w = int(_read_token(f))
        h = int(_read_token(f))
        scale = float(_read_token(f))
        if scale >= 0.0:
            raise PfmError(f"{path}: big-endian PFM (scale {scale}) is unsupported")
        data = np.frombuffer(f.read(4 * w * h * 3), dtype="<f4")
        if data.size != w * h * 3:
            raise PfmError(f"{path}: truncated pixel data")
    return data.reshape(h, w, 3)[::-1].copy()


def _read_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise PfmError("unexpected end of file in PFM header")
        if c in b" \n\r\t":
            if tok:
                return tok
            continue
        tok += c
