import numpy as np


def edge_score(i: int, j: int, distances: np.ndarray) -> float:
    # Edge score = negative distance
    return -distances[i, j]
