import numpy as np


def update_pheromone(pheromone: np.ndarray, solutions: list, costs: np.ndarray, iteration: int, n_iterations: int) -> np.ndarray:
    pheromone = pheromone * 0.9
    for components, cost in zip(solutions, costs):
        deposit = 1.0 / cost
        for i, j in components:
            pheromone[i, j] += deposit
            pheromone[j, i] += deposit
    return pheromone
