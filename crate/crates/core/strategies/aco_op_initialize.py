import numpy as np


def initialize(prize: np.ndarray, distances: np.ndarray, budget: float) -> tuple[np.ndarray, np.ndarray]:
    heuristic = prize[None, :] / np.maximum(distances, 1e-10)
    np.fill_diagonal(heuristic, 0.0)
    pheromone = np.ones_like(distances)
    return heuristic, pheromone
