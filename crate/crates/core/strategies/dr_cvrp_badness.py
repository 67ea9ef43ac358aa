import numpy as np


def customer_badness(position: int, sequence: list, distances: np.ndarray, demands: np.ndarray, capacity: float) -> float:
    c = sequence[position]
    return distances[sequence[position - 1], c] + distances[c, sequence[position + 1]]
