import numpy as np


def guide_matrix(distances: np.ndarray) -> np.ndarray:
    # Long edges are penalized first.
    return distances.copy()
