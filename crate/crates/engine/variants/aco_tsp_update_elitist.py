import numpy as np


def update_pheromone(pheromone: np.ndarray, solutions: list, costs: np.ndarray, iteration: int, n_iterations: int) -> np.ndarray:
    pheromone = pheromone * 0.8
    best = 0
    for k in range(1, len(costs)):
        if costs[k] < costs[best]:
            best = k
    for components, cost in zip(solutions, costs):
        deposit = 1.0 / cost
        for i, j in components:
            pheromone[i, j] += deposit
            pheromone[j, i] += deposit
    bonus = 2.0 / costs[best]
    for i, j in solutions[best]:
        pheromone[i, j] += bonus
        pheromone[j, i] += bonus
    return pheromone
