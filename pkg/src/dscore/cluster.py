"""k-means and k-medoids on feature rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    iterations: int
    restarts: int
    history: tuple = field(default=())
    medoids: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.centers.shape[0]


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("ikm,ikm->ik", diff, diff)


def _check(X, K):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if K < 1:
        raise ValueError("K must be at least 1")
    if X.shape[0] < K:
        raise ValueError(f"need at least K={K} rows, got {X.shape[0]}")
    return X


def _plusplus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[idx[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        nxt = int(rng.integers(n)) if total <= 0 else int(rng.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[idx].copy()


def _lloyd(X, C, max_iter, tol):
    history = []
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(X, C)
        labels = np.argmin(d2, axis=1)  # lowest index wins ties
        own = d2[np.arange(X.shape[0]), labels]
        obj = float(own.sum())
        history.append(obj)
        if len(history) > 1 and history[-2] - obj <= tol * max(history[-2], 1e-300):
            break
        if it == max_iter:
            break
        newC = C.copy()
        counts = np.bincount(labels, minlength=C.shape[0])
        for k in np.flatnonzero(counts):
            newC[k] = X[labels == k].mean(axis=0)
        taken: set[int] = set()
        for k in np.flatnonzero(counts == 0):
            # empty cluster: move it onto the worst-served point
            for far in np.argsort(-own, kind="stable"):
                if int(far) not in taken:
                    taken.add(int(far))
                    newC[k] = X[far]
                    break
        C = newC
    return labels, C, obj, it, tuple(history)


def _transfer_gains(X, labels, sums, counts):
    C = sums / np.maximum(counts, 1)[:, None]
    d2 = _sq_dists(X, C)
    rows = np.arange(X.shape[0])
    na = counts[labels].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        leave = np.where(na > 1, na / (na - 1) * d2[rows, labels], -np.inf)
    join = counts / (counts + 1.0) * d2
    join[rows, labels] = np.inf
    target = np.argmin(join, axis=1)
    return leave - join[rows, target], target


def _hartigan(X, labels, K, max_pass):
    """Single-point transfers that lower the objective, applied until none is left.

    A point moves from cluster a to b when
    ``n_b/(n_b+1) |x-c_b|^2 < n_a/(n_a-1) |x-c_a|^2``. Every fixed point of
    this loop is also a fixed point of Lloyd's step.
    """
    labels = labels.copy()
    counts = np.bincount(labels, minlength=K).astype(float)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, labels, X)
    scale = max(float(np.sum((X - X.mean(axis=0)) ** 2)), 1e-300)
    for _ in range(max_pass):
        gain, _ = _transfer_gains(X, labels, sums, counts)
        cand = np.flatnonzero(gain > 1e-12 * scale)
        if cand.size == 0:
            break
        for i in cand[np.argsort(-gain[cand], kind="stable")]:
            # stats moved since the sweep, so re-check this point alone
            g, t = _transfer_gains(X[i:i + 1], labels[i:i + 1], sums, counts)
            if g[0] <= 1e-12 * scale:
                continue
            a, b = labels[i], t[0]
            sums[a] -= X[i]
            sums[b] += X[i]
            counts[a] -= 1
            counts[b] += 1
            labels[i] = b
    C = sums / np.maximum(counts, 1)[:, None]
    obj = float(_sq_dists(X, C)[np.arange(X.shape[0]), labels].sum())
    return labels, C, obj


def kmeans(X, K: int, restarts: int = 10, max_iter: int = 100, tol: float = 1e-8,
           seed: int = 0) -> ClusteringResult:
    """Best-of-``restarts`` Lloyd iterations from k-means++ seeds, each
    polished by Hartigan single-point transfers.

    Restart ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``; the
    lowest objective wins, ties to the earliest restart.
    """
    X = _check(X, K)
    best = None
    for child in np.random.SeedSequence(seed).spawn(max(1, restarts)):
        rng = np.random.default_rng(child)
        labels, C, _, iters, hist = _lloyd(X, _plusplus(X, K, rng), max_iter, tol)
        labels, C, obj = _hartigan(X, labels, K, max_iter)
        if obj < hist[-1]:
            hist = hist + (obj,)
        out = (labels, C, obj, iters, hist)
        if best is None or out[2] < best[2]:
            best = out
    labels, C, obj, iters, hist = best
    return ClusteringResult(labels.astype(np.int64), C, obj, iters, max(1, restarts), hist)


def _pam(D: np.ndarray, medoids: np.ndarray, max_iter: int):
    cost = D[:, medoids].min(axis=1).sum()
    it = 0
    for it in range(1, max_iter + 1):
        best_gain, best_swap = 1e-12 * max(cost, 1.0), None
        for p in range(medoids.size):
            others = np.delete(medoids, p)
            base = D[:, others].min(axis=1) if others.size else np.full(D.shape[0], np.inf)
            cand = np.minimum(base[:, None], D).sum(axis=0)
            cand[medoids] = np.inf
            o = int(np.argmin(cand))
            gain = cost - cand[o]
            if gain > best_gain:
                best_gain, best_swap = gain, (p, o)
        if best_swap is None:
            break
        medoids = medoids.copy()
        medoids[best_swap[0]] = best_swap[1]
        cost = D[:, medoids].min(axis=1).sum()
    return medoids, float(cost), it


def kmedoids(X, K: int, restarts: int = 10, max_iter: int = 100, seed: int = 0) -> ClusteringResult:
    """PAM swap search minimising the summed Euclidean distance to medoids.

    ``objective`` on the result is still the squared-distance sum, matching
    :func:`kmeans`; the medoid indices are in ``medoids``.
    """
    X = _check(X, K)
    D = np.sqrt(np.maximum(_sq_dists(X, X), 0.0))
    best = None
    for child in np.random.SeedSequence(seed).spawn(max(1, restarts)):
        rng = np.random.default_rng(child)
        init = np.sort(rng.choice(X.shape[0], size=K, replace=False))
        med, cost, iters = _pam(D, init, max_iter)
        if best is None or cost < best[1]:
            best = (med, cost, iters)
    med, _, iters = best
    labels = np.argmin(D[:, med], axis=1)
    C = X[med].copy()
    obj = float(_sq_dists(X, C)[np.arange(X.shape[0]), labels].sum())
    return ClusteringResult(labels.astype(np.int64), C, obj, iters, max(1, restarts), (), np.asarray(med))


def to_mstar(res: ClusteringResult) -> np.ndarray:
    """Matrix whose row i is the center assigned to row i."""
    return res.centers[res.labels]
