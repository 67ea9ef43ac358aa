import numpy as np


def insert_position(city: int, tour: list, distances: np.ndarray) -> int:
    n = len(tour)
    if n == 0:
        return 0
    best = 0
    best_delta = float("inf")
    for p in range(n + 1):
        a = tour[(p - 1) % n]
        b = tour[p % n]
        delta = distances[a, city] + distances[city, b] - distances[a, b]
        if delta < best_delta:
            best = p
            best_delta = delta
    return best
