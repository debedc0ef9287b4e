"""Shared instance generators for the test suite."""
import numpy as np

from stochmatch.graph import random_graph


def graphs(seed, count, offline=(1, 5), online=(1, 5), max_patience=None, weight_mode="edge_weighted", sparsity=0.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = int(rng.integers(offline[0], offline[1] + 1))
        n = int(rng.integers(online[0], online[1] + 1))
        out.append(random_graph(rng, m, n, max_patience, weight_mode, sparsity))
    return out
