import numpy as np


def item_badness(item: int, bins: list, sizes: np.ndarray, capacity: float) -> float:
    for b in bins:
        if item in b:
            load = sum(sizes[k] for k in b)
            return (capacity - load) / capacity
    raise ValueError("item not packed")
