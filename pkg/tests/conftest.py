import numpy as np
import pytest

from dscore.graph import DirectedGraph
from dscore.model import DcbmParams


def random_graph(rng, n, p):
    a = rng.random((n, n)) < p
    np.fill_diagonal(a, False)
    return DirectedGraph.from_dense(a)


def union_find_components(n, pairs):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def largest_of(groups):
    # biggest group, ties to the one holding the smallest node
    return sorted(max(groups, key=lambda g: (len(g), -min(g))))


def random_params(rng, K=None, n=None):
    """Valid parameters: B symmetric-free, positive, well conditioned."""
    K = int(rng.integers(2, 5)) if K is None else K
    n = int(rng.integers(50, 301)) if n is None else n
    while True:
        B = rng.uniform(0.05, 0.5, (K, K)) + np.diag(rng.uniform(0.4, 0.5, K))
        if np.linalg.cond(B) < 1e3:
            break
    labels = np.concatenate([np.arange(K), rng.integers(0, K, n - K)])
    rng.shuffle(labels)
    theta = rng.uniform(0.1, 1.0, n)
    delta = rng.uniform(0.1, 1.0, n)
    return DcbmParams(K, B, theta, delta, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
