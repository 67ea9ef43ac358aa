import numpy as np


def compute_probabilities(heuristic: np.ndarray, pheromone: np.ndarray, iteration: int, n_iterations: int) -> np.ndarray:
    # alpha = 1, beta = 2
    return heuristic * heuristic * pheromone
