"""Simulation and real-data experiment runners with CSV/JSON reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import (
    DirectedGraph,
    NodeSet,
    induced_subgraph,
    largest_weak_component,
    read_edge_file,
    read_labels,
)
from .metrics import EvalReport, Summary, aggregate, misclustering
from .model import DcbmParams, ParamsError, sample_adjacency, sample_labels, sample_theta_mixture
from .pipeline import (
    APPROACHES,
    DEFAULT_ROSTER,
    AlgorithmSpec,
    CoreTooSmallError,
    embed,
    intersection_core,
)

log = logging.getLogger(__name__)

CSV_FIELDS = ("scenario", "n", "algorithm", "approach", "mean_count", "mean_rate", "stderr", "replicates")


@dataclass(frozen=True)
class Scenario:
    B: tuple
    theta_spec: tuple
    delta_independent: bool
    K: int = 2


SCENARIOS = {
    "sbm_symmetric": Scenario(((1, 0.4), (0.4, 1)), ((0.5, 0.01), (0.1, 0.05), (0.6, 0.4)), False),
    "dcbm_symmetric_dense": Scenario(((1, 0.4), (0.4, 1)), ((0.5, 0.05), (0.1, 0.05), (0.6, 0.4)), False),
    "dcbm_asymmetric_sparse": Scenario(((1, 0.4), (0.5, 1)), ((0.5, 0.01), (0.1, 0.01), (0.6, 0.4)), True),
    "dcbm_asymmetric_dense": Scenario(((1, 0.4), (0.5, 1)), ((0.5, 0.05), (0.1, 0.01), (0.6, 0.4)), True),
}


@dataclass
class ExperimentConfig:
    scenario: str
    n_grid: tuple = (800, 1000, 1200)
    replicates: int = 50
    algorithms: tuple = DEFAULT_ROSTER
    approaches: tuple = ("entire", "intersection_attach")
    seed: int = 0
    workers: int = 1
    include_diagonal: bool = True
    restarts: int = 10
    # real_data only
    edges: str | None = None
    labels: str | None = None
    K: int | None = None
    base: int = 0
    top_communities: int | None = None
    name: str | None = None

    def __post_init__(self):
        self.n_grid = tuple(int(n) for n in self.n_grid)
        self.algorithms = tuple(self.algorithms)
        self.approaches = tuple(self.approaches)
        if self.scenario != "real_data" and self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)} or real_data")
        if self.scenario != "real_data" and not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        for a in self.approaches:
            if a not in APPROACHES:
                raise ValueError(f"unknown approach {a!r}")
        for a in self.algorithms:
            AlgorithmSpec.from_name(a)
        if self.scenario == "real_data" and (self.edges is None or self.labels is None):
            raise ValueError("real_data needs edge and label files")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    n: int
    algorithm: str
    approach: str
    mean_count: float
    mean_rate: float
    stderr: float
    replicates: int
    failed: int = 0
    stderr_count: float = 0.0
    mean_evaluated: float = 0.0


@dataclass
class ReplicateResult:
    n: int
    replicate: int
    seed: int
    component_size: int
    core_size: int
    evals: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)


@dataclass
class ExperimentReport:
    rows: list
    replicates: list
    provenance: dict

    def row(self, algorithm: str, approach: str, n: int | None = None) -> ReportRow:
        for r in self.rows:
            if r.algorithm == algorithm and r.approach == approach and (n is None or r.n == n):
                return r
        raise KeyError((algorithm, approach, n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow([r.scenario, r.n, r.algorithm, r.approach, f"{r.mean_count:.6f}",
                        f"{r.mean_rate:.8f}", f"{r.stderr:.8f}", r.replicates])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": [asdict(r) for r in self.rows], "provenance": self.provenance},
                          indent=2, sort_keys=True)

    def write(self, path) -> None:
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(self.to_json())
        else:
            path.write_text(self.to_csv())


def replicate_seed(master: int, *keys: int) -> int:
    """Child seed for one replicate; distinct keys give independent streams."""
    state = np.random.SeedSequence([master, *keys]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _scenario_key(name: str) -> int:
    return zlib.crc32(name.encode())


def sample_scenario(scenario: str, n: int, seed: int) -> DcbmParams:
    sc = SCENARIOS[scenario]
    rng = np.random.default_rng(seed)
    labels = sample_labels(n, sc.K, rng)
    theta = sample_theta_mixture(sc.theta_spec, n, rng)
    delta = sample_theta_mixture(sc.theta_spec, n, rng) if sc.delta_independent else theta.copy()
    return DcbmParams(sc.K, np.array(sc.B, dtype=float), theta, delta, labels)


def evaluate_graph(g: DirectedGraph, truth: np.ndarray, K: int, algorithms: Sequence[str],
                   approaches: Sequence[str], seed: int, restarts: int = 10,
                   core: NodeSet | None = None, svd_cache: dict | None = None):
    """Run every (algorithm, approach) pair on one graph.

    Singular vectors and the intersection core are computed once and shared.
    Returns ``(evals, failures, core)``.
    """
    svd_cache = {} if svd_cache is None else svd_cache
    evals: dict[tuple[str, str], EvalReport] = {}
    failures: list[tuple[str, str]] = []
    if core is None and any(a != "entire" for a in approaches):
        core = intersection_core(g)
    for name in algorithms:
        spec = AlgorithmSpec.from_name(name)
        spec = AlgorithmSpec(spec.family, spec.regularized, spec.q, spec.T_n, spec.tau,
                             type(spec.clustering)(restarts=restarts))
        key = (spec.regularized, spec.tau)
        if key not in svd_cache:
            svd_cache[key] = embed(g, K, spec, seed)
        sv = svd_cache[key]
        for approach in approaches:
            try:
                if approach == "entire":
                    res = APPROACHES[approach](g, K, spec, seed, sv=sv)
                else:
                    res = APPROACHES[approach](g, K, spec, seed, sv=sv, core=core)
            except CoreTooSmallError:
                failures.append((name, approach))
                continue
            idx = res.evaluated
            evals[(name, approach)] = misclustering(res.labels[idx], truth[idx], K)
    return evals, failures, core


def _simulate_one(task) -> ReplicateResult:
    cfg, n, rep = task
    seed = replicate_seed(cfg.seed, _scenario_key(cfg.scenario), n, rep)
    rng = np.random.default_rng(seed)
    try:
        params = sample_scenario(cfg.scenario, n, int(rng.integers(2 ** 63)))
    except ParamsError:
        pairs = [(a, p) for a in cfg.algorithms for p in cfg.approaches]
        return ReplicateResult(n, rep, seed, 0, 0, {}, pairs)
    g0 = sample_adjacency(params, int(rng.integers(2 ** 63)), include_diagonal=cfg.include_diagonal)
    comp = largest_weak_component(g0)
    g, _ = induced_subgraph(g0, comp)
    truth = params.labels[comp.members]
    K = params.K
    if len(comp) < K:
        pairs = [(a, p) for a in cfg.algorithms for p in cfg.approaches]
        return ReplicateResult(n, rep, seed, len(comp), 0, {}, pairs)
    evals, failures, core = evaluate_graph(g, truth, K, cfg.algorithms, cfg.approaches,
                                           int(rng.integers(2 ** 31)), cfg.restarts)
    return ReplicateResult(n, rep, seed, len(comp), len(core) if core is not None else len(comp),
                           evals, failures)


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _summarize(scenario: str, groups: dict, counts_failed: dict) -> list[ReportRow]:
    rows = []
    for (n, alg, app), reports in groups.items():
        failed = counts_failed.get((n, alg, app), 0)
        if not reports:
            rows.append(ReportRow(scenario, n, alg, app, float("nan"), float("nan"), float("nan"), 0, failed))
            continue
        s: Summary = aggregate(reports, strict=False)
        rows.append(ReportRow(scenario, n, alg, app, s.mean_count, s.mean_rate, s.stderr, s.replicates,
                              failed, s.stderr_count, float(np.mean([r.n for r in reports]))))
    return rows


def _provenance(cfg: ExperimentConfig, seeds) -> dict:
    return {
        "config": asdict(cfg),
        "config_hash": cfg.digest(),
        "master_seed": cfg.seed,
        "replicate_seeds": list(seeds),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def run_simulation(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.scenario == "real_data":
        raise ValueError("use run_real for real_data configs")
    tasks = [(cfg, n, rep) for n in cfg.n_grid for rep in range(cfg.replicates)]
    results = _map(_simulate_one, tasks, cfg.workers)
    groups = {(n, a, p): [] for n in cfg.n_grid for a in cfg.algorithms for p in cfg.approaches}
    failed: dict = {}
    for r in results:
        for key, ev in r.evals.items():
            groups[(r.n, *key)].append(ev)
        for key in r.failures:
            failed[(r.n, *key)] = failed.get((r.n, *key), 0) + 1
    rows = _summarize(cfg.scenario, groups, failed)
    return ExperimentReport(rows, results, _provenance(cfg, [r.seed for r in results]))


@dataclass
class RealDataset:
    graph: DirectedGraph
    truth: np.ndarray
    K: int
    node_ids: np.ndarray
    label_values: tuple


def load_real(edges_path, labels_path, base: int = 0, K: int | None = None,
              top_communities: int | None = None) -> RealDataset:
    """Read a labelled edge list and reduce it to its largest weak component.

    With ``top_communities`` only nodes of the largest labelled groups are
    kept before the component is taken. ``node_ids`` maps rows back to the
    file's 0-based ids.
    """
    g = read_edge_file(edges_path, base=base)
    raw = read_labels(labels_path, base=base)
    n = max(g.n, max(raw) + 1 if raw else 0)
    if n > g.n:
        e = g.edges()
        g = DirectedGraph(n, e[:, 0], e[:, 1])
    ids = np.arange(n)
    if top_communities is not None:
        values, sizes = np.unique(list(raw.values()), return_counts=True)
        order = sorted(range(values.size), key=lambda i: (-sizes[i], values[i]))
        keep_vals = {int(values[i]) for i in order[:top_communities]}
        keep = NodeSet.from_indices([i for i, c in raw.items() if c in keep_vals], n)
        g, _ = induced_subgraph(g, keep)
        ids = keep.members
    comp = largest_weak_component(g)
    g, _ = induced_subgraph(g, comp)
    ids = ids[comp.members]
    missing = [int(i) + base for i in ids if int(i) not in raw]
    if missing:
        raise ValueError(f"{len(missing)} nodes of the largest component lack labels, e.g. {missing[:20]}")
    values = sorted({raw[int(i)] for i in ids})
    if K is None:
        K = len(values)
    elif len(values) > K:
        raise ValueError(f"largest component carries {len(values)} distinct labels but K={K}")
    index = {v: k for k, v in enumerate(values)}
    truth = np.array([index[raw[int(i)]] for i in ids], dtype=np.int64)
    return RealDataset(g, truth, K, ids, tuple(values))


def run_real(cfg: ExperimentConfig) -> ExperimentReport:
    """Repeat every (algorithm, approach) pair with fresh clustering seeds.

    The graph, its singular vectors and the core are fixed, so replicates
    differ only through k-means initialisation.
    """
    data = load_real(cfg.edges, cfg.labels, cfg.base, cfg.K, cfg.top_communities)
    core = intersection_core(data.graph)
    svd_cache: dict = {}
    seeds = [replicate_seed(cfg.seed, rep) for rep in range(cfg.replicates)]
    results = []
    for rep, seed in enumerate(seeds):
        evals, failures, _ = evaluate_graph(data.graph, data.truth, data.K, cfg.algorithms,
                                            cfg.approaches, seed % 2 ** 31, cfg.restarts,
                                            core=core, svd_cache=svd_cache)
        results.append(ReplicateResult(data.graph.n, rep, seed, data.graph.n, len(core), evals, failures))
    name = cfg.name or "real_data"
    groups: dict = {}
    failed: dict = {}
    for a in cfg.algorithms:
        for p in cfg.approaches:
            n_eval = len(core) if p == "core_only" else data.graph.n
            groups[(n_eval, a, p)] = [r.evals[(a, p)] for r in results if (a, p) in r.evals]
            failed[(n_eval, a, p)] = sum((a, p) in r.failures for r in results)
    rows = _summarize(name, groups, failed)
    prov = _provenance(cfg, seeds)
    prov.update({"component_size": data.graph.n, "core_size": len(core), "K": data.K})
    return ExperimentReport(rows, results, prov)


def plot_ratio_scatter(features: np.ndarray, labels: np.ndarray, path, title: str = "",
                       xlabel: str = "left ratio", ylabel: str = "right ratio") -> None:
    """Static SVG scatter of the first and last feature columns coloured by label."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    markers = "^so*Dv<>"
    for k in np.unique(labels):
        sel = labels == k
        ax.scatter(features[sel, 0], features[sel, -1], s=8, marker=markers[int(k) % len(markers)],
                   label=f"community {int(k)}", alpha=0.7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
