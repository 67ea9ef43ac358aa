import numpy as np


def route_load(sequence, p, demands):
    load = 0.0
    k = p
    while k > 0 and sequence[k - 1] != 0:
        load = load + demands[sequence[k - 1]]
        k -= 1
    k = p
    while k < len(sequence) and sequence[k] != 0:
        load = load + demands[sequence[k]]
        k += 1
    return load


def insert_position(customer: int, sequence: list, distances: np.ndarray, demands: np.ndarray, capacity: float) -> int:
    n = len(sequence)
    best = n
    best_delta = distances[0, customer] + distances[customer, 0]
    for p in range(1, n):
        a = sequence[p - 1]
        b = sequence[p]
        if a == 0 and b == 0:
            continue
        if route_load(sequence, p, demands) + demands[customer] > capacity + 1e-9:
            continue
        delta = distances[a, customer] + distances[customer, b] - distances[a, b]
        if delta < best_delta or (delta == best_delta and p < best):
            best = p
            best_delta = delta
    return best
