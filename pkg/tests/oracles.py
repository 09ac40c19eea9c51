"""Brute-force reference implementations used by the test-suite."""

import itertools

import numpy as np

from conftest import largest_of, union_find_components


def exhaustive_kmeans(X, K):
    """Minimum within-cluster sum of squares over all K**n assignments."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    labs = np.array(list(itertools.product(range(K), repeat=n)))
    onehot = (labs[:, :, None] == np.arange(K)).astype(float)
    counts = onehot.sum(axis=1)
    sums = np.einsum("mnk,nd->mkd", onehot, X)
    sq = np.einsum("mnk,n->mk", onehot, (X ** 2).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        between = np.where(counts > 0, (sums ** 2).sum(axis=2) / counts, 0.0)
    return float(np.min((sq - between).sum(axis=1)))


def permutation_errors(pred, truth, K):
    return min(int(np.sum(np.array(p)[pred] != truth)) for p in itertools.permutations(range(K)))


def dense_product_component(g, side):
    a = g.to_dense().astype(int)
    m = a @ a.T if side == "left" else a.T @ a
    pairs = [(i, k) for i in range(g.n) for k in range(g.n) if i != k and m[i, k] > 0]
    return largest_of(union_find_components(g.n, pairs))


def dense_attach(g, core_members, core_labels, K):
    a = g.to_dense()
    n = g.n
    full = np.full(n, -1)
    full[core_members] = core_labels
    sizes = np.bincount(core_labels, minlength=K)
    out = full.copy()
    for i in range(n):
        if full[i] >= 0:
            continue
        counts = [sum(int(a[i, j]) + int(a[j, i]) for j in core_members if full[j] == c) for c in range(K)]
        out[i] = int(np.argmax(sizes)) if sum(counts) == 0 else counts.index(max(counts))
    return out
