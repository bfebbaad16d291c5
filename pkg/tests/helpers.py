import numpy as np
from scipy.optimize import linear_sum_assignment


def multiset_distance(a, b) -> float:
    """Largest pairwise gap after optimally matching two equal-size complex sets."""
    a, b = np.asarray(a), np.asarray(b)
    d = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(d)
    return float(d[rows, cols].max())
