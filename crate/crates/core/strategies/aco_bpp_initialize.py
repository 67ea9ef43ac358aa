import numpy as np


def initialize(demands: np.ndarray, capacity: float) -> tuple[np.ndarray, np.ndarray]:
    n = demands.shape[0]
    heuristic = np.tile(demands / capacity, (n, 1))
    pheromone = np.ones((n, n))
    return heuristic, pheromone
