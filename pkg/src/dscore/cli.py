"""Command-line entry point: ``dscore <subcommand> [flags]``.

Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure
(SVD non-convergence or an intersection core smaller than K).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .graph import read_edge_file, read_labels, to_edge_list, write_labels
from .harness import SCENARIOS, ExperimentConfig, load_real, plot_ratio_scatter, run_real, run_simulation, sample_scenario
from .metrics import misclustering
from .model import load_config, params_from_config, sample_adjacency
from .pipeline import APPROACHES, DEFAULT_ROSTER, AlgorithmSpec, CoreTooSmallError, embed, features, intersection_core, with_clustering
from .ratio import RatioConfig, dscore_ratio, dscoreq_ratio
from .spectral import LaplacianConfig, SvdConvergenceError, regularized_laplacian, top_k_svd

log = logging.getLogger("dscore")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DSCORE_THREADS", "1")))
    except ValueError:
        return 1


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _matrix_csv(cols: list[str], data: np.ndarray, base: int) -> str:
    lines = [",".join(["node", *cols])]
    for i, row in enumerate(data):
        lines.append(",".join([str(i + base), *(repr(float(x)) for x in row)]))
    return "\n".join(lines) + "\n"


def _graph_args(p, k=True):
    p.add_argument("--edges", required=True, help="edge list file, one 'src dst' pair per line")
    p.add_argument("--base", type=int, choices=(0, 1), default=0, help="smallest node id in input files")
    if k:
        p.add_argument("--k", type=int, required=True, help="number of communities")
    p.add_argument("--seed", type=int, default=0, help="random seed")


def _cmd_generate(a) -> int:
    cfg = load_config(a.config)
    param_seed, edge_seed = (int(x) for x in np.random.SeedSequence(a.seed).generate_state(2))
    params = params_from_config(cfg, seed=param_seed)
    g = sample_adjacency(params, edge_seed, include_diagonal=not a.no_diagonal)
    _write(a.out, f"# n={g.n}\n" + to_edge_list(g, a.base))
    if a.labels_out:
        _write(a.labels_out, write_labels(params.labels, a.base))
    return 0


def _load_graph(a):
    g = read_edge_file(a.edges, base=a.base, drop_self_loops=not getattr(a, "keep_self_loops", False))
    if g.n < a.k:
        raise ValueError(f"graph has {g.n} nodes, fewer than K={a.k}")
    return g


def _cmd_svd(a) -> int:
    g = _load_graph(a)
    m = regularized_laplacian(g, LaplacianConfig(a.tau)) if a.regularized else g.adjacency
    sv = top_k_svd(m, a.k, tol=a.tol, seed=a.seed)
    cols = [f"u{j + 1}" for j in range(a.k)] + [f"v{j + 1}" for j in range(a.k)]
    _write(a.out, _matrix_csv(cols, np.hstack([sv.U, sv.V]), a.base))
    print("sigma " + " ".join(repr(float(s)) for s in sv.sigma), file=sys.stderr)
    for w in sv.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_ratio(a) -> int:
    g = _load_graph(a)
    spec = AlgorithmSpec("dscoreq" if a.q else "dscore", a.regularized, q=a.q or None, T_n=a.t_n, tau=a.tau)
    sv = embed(g, a.k, spec, a.seed)
    cfg = RatioConfig(T_n=a.t_n, q=a.q or 2)
    r = dscoreq_ratio(sv, cfg) if a.q else dscore_ratio(sv, cfg)
    width = r.data.shape[1] // 2
    cols = [f"ru{j + 1}" for j in range(width)] + [f"rv{j + 1}" for j in range(width)]
    _write(a.out, _matrix_csv(cols, r.data, a.base))
    if a.plot:
        if not a.labels:
            raise ValueError("--plot needs --labels for colouring")
        raw = read_labels(a.labels, a.base)
        lab = np.array([raw.get(i, -1) for i in range(g.n)])
        plot_ratio_scatter(r.data, lab, a.plot, title=r.kind)
    return 0


def _spec_from_args(a) -> AlgorithmSpec:
    spec = AlgorithmSpec.from_name(a.algo)
    spec = AlgorithmSpec(spec.family, spec.regularized, spec.q, a.t_n, a.tau, spec.clustering)
    return with_clustering(spec, method=a.method, restarts=a.restarts)


def _cmd_cluster(a) -> int:
    g = _load_graph(a)
    spec = _spec_from_args(a)
    res = APPROACHES[a.approach](g, a.k, spec, a.seed)
    idx = res.evaluated
    _write(a.out, "".join(f"{i + a.base} {int(res.labels[i])}\n" for i in idx))
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_eval(a) -> int:
    pred = read_labels(a.pred, a.base)
    truth = read_labels(a.truth, a.base)
    missing = sorted(set(pred) - set(truth))
    if missing:
        raise ValueError(f"truth lacks labels for nodes {[m + a.base for m in missing[:20]]}")
    nodes = sorted(pred)
    p = np.array([pred[i] for i in nodes], dtype=np.int64)
    t = np.array([truth[i] for i in nodes], dtype=np.int64)
    rep = misclustering(p, t, a.k)
    print(f"misclustered {rep.misclustered}")
    print(f"rate {rep.rate:.8f}")
    if a.out:
        Path(a.out).write_text(json.dumps(rep.to_dict(), indent=2))
    return 0


def _emit_report(report, a) -> None:
    _write(a.out, report.to_csv())
    if a.json:
        Path(a.json).write_text(report.to_json())


def _cmd_simulate(a) -> int:
    fields = {}
    if a.config:
        fields.update(load_config(a.config))
    for key, val in (("scenario", a.scenario), ("n_grid", a.n_grid), ("replicates", a.replicates),
                     ("algorithms", a.algo), ("approaches", a.approach), ("seed", a.seed),
                     ("workers", a.workers), ("restarts", a.restarts)):
        if val is not None:
            fields[key] = val
    fields.setdefault("workers", default_workers())
    if "scenario" not in fields:
        raise ValueError("a scenario is required (--scenario or config file)")
    cfg = ExperimentConfig(**fields)
    report = run_simulation(cfg)
    _emit_report(report, a)
    if a.plot:
        n = cfg.n_grid[-1]
        param_seed, edge_seed = (int(x) for x in np.random.SeedSequence(cfg.seed).generate_state(2))
        params = sample_scenario(cfg.scenario, n, param_seed)
        g = sample_adjacency(params, edge_seed)
        spec = AlgorithmSpec("dscore")
        X = features(embed(g, params.K, spec, cfg.seed), spec)
        plot_ratio_scatter(X, params.labels, a.plot, title=f"{cfg.scenario}, n={n}")
    return 0


def _cmd_realdata(a) -> int:
    cfg = ExperimentConfig(
        "real_data", n_grid=(), replicates=a.reps, algorithms=tuple(a.algo or DEFAULT_ROSTER),
        approaches=tuple(a.approach or ("entire", "intersection_attach", "core_only")), seed=a.seed,
        restarts=a.restarts, edges=a.edges, labels=a.labels,
        K=a.k, base=a.base, top_communities=a.top_communities, name=a.name)
    report = run_real(cfg)
    _emit_report(report, a)
    print(f"component {report.provenance['component_size']} nodes, core {report.provenance['core_size']} nodes",
          file=sys.stderr)
    if a.plot:
        data = load_real(a.edges, a.labels, a.base, a.k, a.top_communities)
        spec = AlgorithmSpec("dscore")
        X = features(embed(data.graph, data.K, spec, a.seed), spec)
        plot_ratio_scatter(X, data.truth, a.plot, title="entire graph")
        core = intersection_core(data.graph)
        if len(core):
            stem = Path(a.plot)
            plot_ratio_scatter(X[core.members], data.truth[core.members],
                               stem.with_name(stem.stem + "_core" + stem.suffix), title="intersection core")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dscore", description="Spectral community detection for directed networks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a directed graph from a block-model config")
    g.add_argument("--config", required=True, help="JSON or YAML params file")
    g.add_argument("--seed", type=int, default=0, help="random seed")
    g.add_argument("--out", default="-", help="edge list output path")
    g.add_argument("--labels-out", help="write true community labels here")
    g.add_argument("--base", type=int, choices=(0, 1), default=0, help="smallest node id in output")
    g.add_argument("--no-diagonal", action="store_true", help="never sample self-loops")
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("svd", help="top-K singular vectors as CSV")
    _graph_args(s)
    s.add_argument("--tol", type=float, default=1e-10, help="relative residual tolerance")
    s.add_argument("--regularized", action="store_true", help="use the regularized Laplacian")
    s.add_argument("--tau", type=float, help="Laplacian regularizer (default: mean degree)")
    s.add_argument("--out", default="-", help="CSV output path")
    s.set_defaults(func=_cmd_svd)

    r = sub.add_parser("ratio", help="D-SCORE ratio features as CSV")
    _graph_args(r)
    r.add_argument("--q", type=int, default=0, help="row norm order; 0 selects entrywise ratios")
    r.add_argument("--t-n", type=float, help="ratio clamp (default log n)")
    r.add_argument("--regularized", action="store_true", help="use the regularized Laplacian")
    r.add_argument("--tau", type=float, help="Laplacian regularizer (default: mean degree)")
    r.add_argument("--labels", help="label file for --plot colouring")
    r.add_argument("--plot", help="SVG scatter output path")
    r.add_argument("--out", default="-", help="CSV output path")
    r.set_defaults(func=_cmd_ratio)

    c = sub.add_parser("cluster", help="cluster a graph and write node labels")
    _graph_args(c)
    c.add_argument("--algo", default="dscore", help="dscore, dscore<q>, rdscore, rdscore<q>, opca or rpca")
    c.add_argument("--approach", choices=sorted(APPROACHES), default="entire", help="which nodes to cluster")
    c.add_argument("--method", choices=("kmeans", "kmedoids"), default="kmeans", help="clustering method")
    c.add_argument("--restarts", type=int, default=10, help="clustering restarts")
    c.add_argument("--t-n", type=float, help="ratio clamp (default log n)")
    c.add_argument("--tau", type=float, help="Laplacian regularizer (default: mean degree)")
    c.add_argument("--out", default="-", help="label file output path")
    c.set_defaults(func=_cmd_cluster)

    e = sub.add_parser("eval", help="misclustering count of predicted against true labels")
    e.add_argument("--pred", required=True, help="predicted label file")
    e.add_argument("--truth", required=True, help="true label file")
    e.add_argument("--k", type=int, required=True, help="number of communities")
    e.add_argument("--base", type=int, choices=(0, 1), default=0, help="smallest node id in input files")
    e.add_argument("--out", help="JSON report path")
    e.set_defaults(func=_cmd_eval)

    m = sub.add_parser("simulate", help="run a simulation study")
    m.add_argument("--config", help="JSON or YAML experiment config")
    m.add_argument("--scenario", choices=sorted(SCENARIOS), help="simulation setting")
    m.add_argument("--n-grid", type=int, nargs="+", help="graph sizes")
    m.add_argument("--replicates", type=int, help="replicates per size")
    m.add_argument("--algo", nargs="+", help="algorithm roster")
    m.add_argument("--approach", nargs="+", choices=sorted(APPROACHES), help="approaches to run")
    m.add_argument("--restarts", type=int, help="clustering restarts")
    m.add_argument("--seed", type=int, help="master seed")
    m.add_argument("--workers", type=int, help="parallel processes (default $DSCORE_THREADS or 1)")
    m.add_argument("--out", default="-", help="CSV report path")
    m.add_argument("--json", help="JSON report path")
    m.add_argument("--plot", help="SVG ratio scatter of one sample at the largest n")
    m.set_defaults(func=_cmd_simulate)

    d = sub.add_parser("realdata", help="run the real-data study on a labelled edge list")
    d.add_argument("--edges", required=True, help="edge list file")
    d.add_argument("--labels", required=True, help="node label file")
    d.add_argument("--k", type=int, help="number of communities (default: distinct labels)")
    d.add_argument("--base", type=int, choices=(0, 1), default=0, help="smallest node id in input files")
    d.add_argument("--top-communities", type=int, help="keep only the largest labelled groups")
    d.add_argument("--algo", nargs="+", help="algorithm roster")
    d.add_argument("--approach", nargs="+", choices=sorted(APPROACHES), help="approaches to run")
    d.add_argument("--reps", type=int, default=100, help="replicates (clustering seeds)")
    d.add_argument("--restarts", type=int, default=10, help="clustering restarts")
    d.add_argument("--seed", type=int, default=0, help="master seed")
    d.add_argument("--name", help="scenario label in the report")
    d.add_argument("--out", default="-", help="CSV report path")
    d.add_argument("--json", help="JSON report path")
    d.add_argument("--plot", help="SVG ratio scatter path (a _core twin is also written)")
    d.set_defaults(func=_cmd_realdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (SvdConvergenceError, CoreTooSmallError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, ZeroDivisionError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
