import numpy as np


def customer_badness(position: int, sequence: list, distances: np.ndarray, demands: np.ndarray, capacity: float) -> float:
    c = sequence[position]
    a = sequence[position - 1]
    b = sequence[position + 1]
    return distances[a, c] + distances[c, b] - distances[a, b]
