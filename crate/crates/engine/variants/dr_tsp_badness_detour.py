import numpy as np


def city_badness(position: int, tour: list, distances: np.ndarray) -> float:
    # Length saved by short-cutting the city out of the tour.
    n = len(tour)
    city = tour[position]
    prev = tour[(position - 1) % n]
    nxt = tour[(position + 1) % n]
    return distances[prev, city] + distances[city, nxt] - distances[prev, nxt]
