import numpy as np


def insert_position(item: int, bins: list, sizes: np.ndarray, capacity: float) -> int:
    best = len(bins)
    best_residual = float("inf")
    for b, members in enumerate(bins):
        load = sum(sizes[k] for k in members)
        residual = capacity - load - sizes[item]
        if residual >= -1e-9 and residual < best_residual:
            best = b
            best_residual = residual
    return best
