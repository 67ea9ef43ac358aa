import numpy as np


def edge_score(i: int, j: int, sizes: np.ndarray, capacity: float) -> float:
    # Prefer the largest item that still fits.
    return sizes[j] / capacity
