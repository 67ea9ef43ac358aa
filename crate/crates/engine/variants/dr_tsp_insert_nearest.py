import numpy as np


def insert_position(city: int, tour: list, distances: np.ndarray) -> int:
    # Place the city next to its nearest tour neighbour, on the cheaper side.
    n = len(tour)
    if n == 0:
        return 0
    q = 0
    for k in range(1, n):
        if distances[city, tour[k]] < distances[city, tour[q]]:
            q = k
    a = tour[(q - 1) % n]
    b = tour[q]
    c = tour[(q + 1) % n]
    before = distances[a, city] + distances[city, b] - distances[a, b]
    after = distances[b, city] + distances[city, c] - distances[b, c]
    if after < before:
        return q + 1
    return q
