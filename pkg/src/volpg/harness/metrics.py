"""Image error metrics."""

import numpy as np


def compute_mse(image: np.ndarray, reference: np.ndarray) -> float:
    """Mean over pixels and channels of the squared difference."""
    a = np.asarray(image, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.mean(diff * diff))
