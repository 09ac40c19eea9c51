"""Sparse directed graphs, edge-list I/O and the connectivity queries used by
intersection-with-attachment."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class EdgeListError(ValueError):
    """Malformed edge or label file."""


@dataclass(frozen=True)
class NodeSet:
    """Sorted, deduplicated node ids plus a membership mask."""

    members: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "NodeSet":
        members = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                                       dtype=np.int64))
        if members.size and (members[0] < 0 or members[-1] >= n):
            raise IndexError(f"node ids must lie in [0, {n})")
        mask = np.zeros(n, dtype=bool)
        mask[members] = True
        members.setflags(write=False)
        mask.setflags(write=False)
        return cls(members, mask)

    @property
    def n(self) -> int:
        return self.mask.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, NodeSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.members, other.members)

    __hash__ = None

    def __len__(self) -> int:
        return int(self.members.size)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.mask.size and bool(self.mask[i])

    def __iter__(self):
        return iter(self.members.tolist())

    def intersection(self, other: "NodeSet") -> "NodeSet":
        return NodeSet.from_indices(np.flatnonzero(self.mask & other.mask), self.n)

    def complement(self) -> "NodeSet":
        return NodeSet.from_indices(np.flatnonzero(~self.mask), self.n)


class DirectedGraph:
    """Unweighted directed graph on nodes ``0..n-1``.

    Stored as a CSR adjacency (out-neighbours) and its CSC twin (in-neighbours).
    Instances are treated as immutable.
    """

    def __init__(self, n: int, src, dst):
        if n < 0:
            raise ValueError("n must be non-negative")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have the same length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise IndexError(f"edge endpoints must lie in [0, {n})")
        data = np.ones(src.size, dtype=np.float64)
        adj = sp.csr_matrix((data, (src, dst)), shape=(n, n))
        adj.sum_duplicates()
        adj.data[:] = 1.0
        adj.sort_indices()
        self._n = n
        self._adj = adj
        self._adj_csc = adj.tocsc()

    @classmethod
    def from_sparse(cls, m) -> "DirectedGraph":
        coo = sp.coo_matrix(m)
        keep = coo.data != 0
        if coo.shape[0] != coo.shape[1]:
            raise ValueError("adjacency must be square")
        return cls(coo.shape[0], coo.row[keep], coo.col[keep])

    @classmethod
    def from_dense(cls, a) -> "DirectedGraph":
        a = np.asarray(a)
        src, dst = np.nonzero(a)
        return cls(a.shape[0], src, dst)

    @property
    def n(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return int(self._adj.nnz)

    @property
    def adjacency(self) -> sp.csr_matrix:
        """CSR adjacency with unit entries (do not mutate)."""
        return self._adj

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of ordered pairs, sorted by source then target."""
        coo = self._adj.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges()}

    def out_neighbors(self, i: int) -> np.ndarray:
        a = self._adj
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def in_neighbors(self, j: int) -> np.ndarray:
        a = self._adj_csc
        return np.sort(a.indices[a.indptr[j]:a.indptr[j + 1]])

    def has_edge(self, i: int, j: int) -> bool:
        return bool(np.any(self.out_neighbors(i) == j))

    def transpose(self) -> "DirectedGraph":
        e = self.edges()
        return DirectedGraph(self._n, e[:, 1], e[:, 0])

    def to_dense(self) -> np.ndarray:
        return self._adj.toarray()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self._n == other._n and np.array_equal(self.edges(), other.edges())

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self._n}, edges={self.n_edges})"


def _iter_tokens(text: TextIO | str):
    stream = io.StringIO(text) if isinstance(text, str) else text
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith("%"):
            continue
        yield lineno, stripped.split()


def from_edge_list(text: TextIO | str, base: int = 0, drop_self_loops: bool = True,
                   n: int | None = None) -> DirectedGraph:
    """Parse whitespace-separated ``src dst`` lines into a graph.

    ``n`` defaults to one more than the largest (rebased) id. Duplicate edges
    collapse; self-loops are removed when ``drop_self_loops`` is set.
    """
    if base not in (0, 1):
        raise ValueError("base must be 0 or 1")
    src, dst = [], []
    for lineno, tokens in _iter_tokens(text):
        if len(tokens) < 2:
            raise EdgeListError(f"line {lineno}: expected two node ids, got {len(tokens)} token(s)")
        try:
            i, j = int(tokens[0]) - base, int(tokens[1]) - base
        except ValueError:
            raise EdgeListError(f"line {lineno}: node ids must be integers") from None
        if i < 0 or j < 0:
            raise EdgeListError(f"line {lineno}: node id below base {base}")
        if drop_self_loops and i == j:
            continue
        src.append(i)
        dst.append(j)
    size = (max(max(src), max(dst)) + 1) if src else 0
    if n is None:
        n = size
    elif n < size:
        raise EdgeListError(f"edge list references node {size - 1 + base} but n={n}")
    return DirectedGraph(n, src, dst)


def to_edge_list(g: DirectedGraph, base: int = 0) -> str:
    return "".join(f"{i + base} {j + base}\n" for i, j in g.edges())


def read_edge_file(path, base: int = 0, drop_self_loops: bool = True) -> DirectedGraph:
    with open(path) as fh:
        return from_edge_list(fh, base=base, drop_self_loops=drop_self_loops)


def parse_labels(text: TextIO | str, base: int = 0) -> dict[int, int]:
    """Parse ``node_id label`` lines into a dict keyed by 0-based node id.

    Labels are kept as the raw integers in the file.
    """
    labels: dict[int, int] = {}
    for lineno, tokens in _iter_tokens(text):
        if len(tokens) < 2:
            raise EdgeListError(f"line {lineno}: expected 'node label'")
        try:
            node, lab = int(tokens[0]) - base, int(tokens[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: node id and label must be integers") from None
        if node < 0:
            raise EdgeListError(f"line {lineno}: node id below base {base}")
        labels[node] = lab
    return labels


def read_labels(path, base: int = 0) -> dict[int, int]:
    with open(path) as fh:
        return parse_labels(fh, base=base)


def write_labels(labels, base: int = 0) -> str:
    return "".join(f"{i + base} {int(c)}\n" for i, c in enumerate(labels))


def _largest(component_ids: np.ndarray, n: int) -> NodeSet:
    # ties go to the component holding the smallest node id
    if n == 0:
        return NodeSet.from_indices([], 0)
    sizes = np.bincount(component_ids)
    first = np.full(sizes.size, n, dtype=np.int64)
    np.minimum.at(first, component_ids, np.arange(n))
    best = min(range(sizes.size), key=lambda c: (-sizes[c], first[c]))
    return NodeSet.from_indices(np.flatnonzero(component_ids == best), n)


def largest_weak_component(g: DirectedGraph) -> NodeSet:
    if g.n < 1:
        raise ValueError("graph has no nodes")
    _, comp = connected_components(g.adjacency, directed=True, connection="weak")
    return _largest(comp, g.n)


def product_component(g: DirectedGraph, side: str = "left") -> NodeSet:
    """Largest connected component of the nonzero pattern of A A^T (left) or
    A^T A (right), ignoring the diagonal.

    Two nodes are linked on the left side when they share an out-neighbour and
    on the right side when they share an in-neighbour. Computed on the
    bipartite node/neighbour incidence graph, so no product is formed.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if g.n < 1:
        raise ValueError("graph has no nodes")
    n = g.n
    a = g.adjacency if side == "left" else g.adjacency.T.tocsr()
    # rows 0..n-1 are nodes, n..2n-1 are the shared neighbours
    bip = sp.bmat([[None, a], [a.T, None]], format="csr")
    _, comp = connected_components(bip, directed=False)
    return _largest(np.unique(comp[:n], return_inverse=True)[1], n)


def induced_subgraph(g: DirectedGraph, s: NodeSet) -> tuple[DirectedGraph, dict[int, int]]:
    if len(s) == 0:
        raise ValueError("cannot induce a subgraph on an empty node set")
    if s.n != g.n:
        raise ValueError("node set belongs to a graph of a different size")
    idx = s.members
    sub = g.adjacency[idx][:, idx]
    index_map = {int(old): new for new, old in enumerate(idx)}
    return DirectedGraph.from_sparse(sub), index_map


def degrees(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Out- and in-degree counts."""
    a = g.adjacency
    out = np.diff(a.indptr).astype(np.int64)
    inn = np.bincount(a.indices, minlength=g.n).astype(np.int64)
    return out, inn
