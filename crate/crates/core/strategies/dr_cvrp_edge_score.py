import numpy as np


def edge_score(i: int, j: int, distances: np.ndarray, demands: np.ndarray, capacity: float) -> float:
    return -distances[i, j]
