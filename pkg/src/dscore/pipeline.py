"""End-to-end community detection: spectral embedding, ratio features,
clustering, and the intersection-with-attachment driver."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .cluster import ClusteringResult, kmeans, kmedoids
from .graph import DirectedGraph, NodeSet, product_component
from .ratio import RatioConfig, dscore_ratio, dscoreq_ratio
from .spectral import LaplacianConfig, SingularTriple, regularized_laplacian, top_k_svd

FAMILIES = ("dscore", "dscoreq", "opca")


class CoreTooSmallError(RuntimeError):
    """The intersection core has fewer than K nodes."""


@dataclass(frozen=True)
class ClusterConfig:
    method: str = "kmeans"
    restarts: int = 10
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("kmeans", "kmedoids"):
            raise ValueError(f"unknown clustering method {self.method!r}")


@dataclass(frozen=True)
class AlgorithmSpec:
    family: str
    regularized: bool = False
    q: int | None = None
    T_n: float | None = None
    tau: float | None = None
    clustering: ClusterConfig = field(default_factory=ClusterConfig)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if (self.q is not None) != (self.family == "dscoreq"):
            raise ValueError("q is required for dscoreq and forbidden otherwise")

    @property
    def ratio(self) -> RatioConfig:
        return RatioConfig(T_n=self.T_n, q=self.q or 2)

    @property
    def name(self) -> str:
        prefix = "r" if self.regularized else ""
        if self.family == "opca":
            return "rpca" if self.regularized else "opca"
        if self.family == "dscoreq":
            return f"{prefix}dscore{self.q}"
        return f"{prefix}dscore"

    @classmethod
    def from_name(cls, name: str, **kwargs) -> "AlgorithmSpec":
        """Parse ``dscore``, ``dscore<q>``, ``rdscore``, ``rdscore<q>``, ``opca``, ``rpca``."""
        key = name.strip().lower().replace("-", "").replace("_", "")
        if key in ("opca", "pca"):
            return cls("opca", False, **kwargs)
        if key == "rpca":
            return cls("opca", True, **kwargs)
        m = re.fullmatch(r"(r?)dscore(q?)(\d*)", key)
        if not m or (m.group(2) and not m.group(3)):
            raise ValueError(f"unknown algorithm {name!r}")
        reg = bool(m.group(1))
        if m.group(3):
            return cls("dscoreq", reg, q=int(m.group(3)), **kwargs)
        return cls("dscore", reg, **kwargs)


DEFAULT_ROSTER = ("dscore", "dscore2", "rdscore", "rdscore2", "opca", "rpca")


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Labels for every node (``-1`` for nodes that were not clustered)."""

    labels: np.ndarray
    core: NodeSet
    attached: NodeSet
    features: np.ndarray
    clustering: ClusteringResult
    svd: SingularTriple
    warnings: tuple = ()

    @property
    def evaluated(self) -> np.ndarray:
        return np.flatnonzero(self.labels >= 0)


def spectral_matrix(g: DirectedGraph, spec: AlgorithmSpec):
    if spec.regularized:
        return regularized_laplacian(g, LaplacianConfig(spec.tau))
    return g.adjacency


def embed(g: DirectedGraph, K: int, spec: AlgorithmSpec, seed: int = 0) -> SingularTriple:
    """Top-K singular triple of A, or of L for regularized specs."""
    return top_k_svd(spectral_matrix(g, spec), K, seed=seed)


def features(sv: SingularTriple, spec: AlgorithmSpec) -> np.ndarray:
    if spec.family == "dscore":
        return dscore_ratio(sv, spec.ratio).data
    if spec.family == "dscoreq":
        return dscoreq_ratio(sv, spec.ratio).data
    return np.hstack([sv.V, sv.U])


def _cluster(X: np.ndarray, K: int, spec: AlgorithmSpec, seed: int) -> ClusteringResult:
    c = spec.clustering
    if c.method == "kmedoids":
        return kmedoids(X, K, restarts=c.restarts, max_iter=c.max_iter, seed=seed)
    return kmeans(X, K, restarts=c.restarts, max_iter=c.max_iter, tol=c.tol, seed=seed)


def _check_k(K: int, spec: AlgorithmSpec):
    if spec.family == "dscore" and K < 2:
        raise ValueError("D-SCORE needs K >= 2")
    if K < 1:
        raise ValueError("K must be positive")


def _svd_warnings(sv: SingularTriple, X: np.ndarray) -> list[str]:
    out = list(sv.warnings)
    zero_u = int(np.sum(~np.any(sv.U != 0, axis=1)))
    zero_v = int(np.sum(~np.any(sv.V != 0, axis=1)))
    if zero_u or zero_v:
        out.append(f"zero_rows:U={zero_u},V={zero_v}")
    return out


def run_entire(g: DirectedGraph, K: int, spec: AlgorithmSpec, seed: int = 0,
               sv: SingularTriple | None = None) -> PipelineResult:
    """Cluster every node from the full-graph singular vectors."""
    _check_k(K, spec)
    sv = embed(g, K, spec, seed) if sv is None else sv
    X = features(sv, spec)
    res = _cluster(X, K, spec, seed)
    every = NodeSet.from_indices(np.arange(g.n), g.n)
    return PipelineResult(res.labels.copy(), every, NodeSet.from_indices([], g.n), X, res, sv,
                          tuple(_svd_warnings(sv, X)))


def intersection_core(g: DirectedGraph) -> NodeSet:
    """Nodes in both the largest A A^T component and the largest A^T A component."""
    return product_component(g, "left").intersection(product_component(g, "right"))


def _attach(g: DirectedGraph, core: NodeSet, core_labels, K: int):
    core_labels = np.asarray(core_labels, dtype=np.int64)
    if len(core) == 0:
        raise ValueError("core is empty")
    if core_labels.shape != (len(core),):
        raise ValueError("core_labels must align with core.members")
    labels = np.full(g.n, -1, dtype=np.int64)
    labels[core.members] = core_labels
    outside = np.flatnonzero(~core.mask)
    if outside.size == 0:
        return labels, np.array([], dtype=np.int64)
    a = g.adjacency
    sym = (a + a.T).tocsr()[outside][:, core.members]
    onehot = sp.csr_matrix((np.ones(len(core)), (np.arange(len(core)), core_labels)),
                           shape=(len(core), K))
    counts = np.asarray((sym @ onehot).todense())
    chosen = np.argmax(counts, axis=1)  # ties: smallest community index
    unreached = counts.sum(axis=1) == 0
    sizes = np.bincount(core_labels, minlength=K)
    chosen[unreached] = int(np.argmax(sizes))
    labels[outside] = chosen
    return labels, outside[unreached]


def attach(g: DirectedGraph, core: NodeSet, core_labels, K: int) -> np.ndarray:
    """Label each non-core node by the community it has most (in + out) edges to.

    Ties go to the smallest community index; nodes with no edge into the core
    join the largest core community.
    """
    return _attach(g, core, core_labels, K)[0]


def _core_clustering(g, K, spec, seed, sv, core):
    _check_k(K, spec)
    core = intersection_core(g) if core is None else core
    if len(core) < K:
        raise CoreTooSmallError(f"intersection core has {len(core)} nodes, fewer than K={K}")
    # singular vectors come from the whole graph; only their rows are restricted
    sv = embed(g, K, spec, seed) if sv is None else sv
    # the clamp is log n of the whole graph, not of the core
    fixed = replace(spec, T_n=spec.ratio.threshold(g.n))
    X = features(sv.restrict(core.members), fixed)
    res = _cluster(X, K, spec, seed)
    return core, sv, X, res


def run_intersection_attach(g: DirectedGraph, K: int, spec: AlgorithmSpec, seed: int = 0,
                            sv: SingularTriple | None = None,
                            core: NodeSet | None = None) -> PipelineResult:
    core, sv, X, res = _core_clustering(g, K, spec, seed, sv, core)
    labels, unreached = _attach(g, core, res.labels, K)
    warns = _svd_warnings(sv, X)
    if unreached.size:
        warns.append(f"unreached:{unreached.size}")
    return PipelineResult(labels, core, core.complement(), X, res, sv, tuple(warns))


def run_core_only(g: DirectedGraph, K: int, spec: AlgorithmSpec, seed: int = 0,
                  sv: SingularTriple | None = None, core: NodeSet | None = None) -> PipelineResult:
    """Cluster the intersection core; nodes outside it keep label ``-1``."""
    core, sv, X, res = _core_clustering(g, K, spec, seed, sv, core)
    labels = np.full(g.n, -1, dtype=np.int64)
    labels[core.members] = res.labels
    return PipelineResult(labels, core, NodeSet.from_indices([], g.n), X, res, sv,
                          tuple(_svd_warnings(sv, X)))


APPROACHES = {
    "entire": run_entire,
    "intersection_attach": run_intersection_attach,
    "core_only": run_core_only,
}


def with_clustering(spec: AlgorithmSpec, **changes) -> AlgorithmSpec:
    return replace(spec, clustering=replace(spec.clustering, **changes))
