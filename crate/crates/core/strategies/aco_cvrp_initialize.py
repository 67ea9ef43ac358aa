import numpy as np


def initialize(distances: np.ndarray, coordinates: np.ndarray, demands: np.ndarray, capacity: float) -> tuple[np.ndarray, np.ndarray]:
    heuristic = 1.0 / np.maximum(distances, 1e-10)
    np.fill_diagonal(heuristic, 0.0)
    pheromone = np.ones_like(distances)
    return heuristic, pheromone
