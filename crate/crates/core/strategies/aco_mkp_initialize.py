import numpy as np


def initialize(prize: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    heuristic = prize[None, :] / np.maximum(weight, 1e-10)
    pheromone = np.ones_like(weight)
    return heuristic, pheromone
