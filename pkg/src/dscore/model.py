"""Directed degree-corrected block model: parameters, sampling and the exact
low-rank structure of the expected adjacency matrix."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import DirectedGraph

DENSE_LIMIT = 5000


class ParamsError(ValueError):
    """Model parameters violate a bound or structural requirement."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True, eq=False)
class DcbmParams:
    K: int
    B: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        for name, dtype in (("B", float), ("theta", float), ("delta", float), ("labels", np.int64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.labels.size
        problems = []
        if self.B.shape != (self.K, self.K):
            problems.append(f"B has shape {self.B.shape}, expected ({self.K}, {self.K})")
        if self.theta.shape != (n,) or self.delta.shape != (n,):
            problems.append("theta, delta and labels must have equal length")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.K):
            problems.append(f"labels must lie in [0, {self.K})")
        if problems:
            raise ParamsError(problems)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def community_norms(self, vec: np.ndarray) -> np.ndarray:
        """Per-community l2 norms of ``vec``."""
        return np.sqrt(np.bincount(self.labels, weights=vec ** 2, minlength=self.K))

    def edge_probabilities(self, rows: slice | np.ndarray = slice(None)) -> np.ndarray:
        th = self.theta[rows]
        return th[:, None] * self.B[self.labels[rows]][:, self.labels] * self.delta[None, :]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "B": self.B.tolist(),
            "theta": self.theta.tolist(),
            "delta": self.delta.tolist(),
            "labels": self.labels.tolist(),
        }


@dataclass(frozen=True)
class DcbmDiagnostics:
    Z: float
    err_n: float
    theta_norms: np.ndarray
    delta_norms: np.ndarray
    theta_norm_spread: float
    delta_norm_spread: float
    degree_condition: float
    flags: dict = field(default_factory=dict)

    @property
    def assumptions_hold(self) -> bool:
        return all(self.flags.values())


@dataclass(frozen=True, eq=False)
class TheoreticalSvd:
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    H: np.ndarray
    Lambda_S: np.ndarray
    Psi_theta: np.ndarray
    Psi_delta: np.ndarray
    labels: np.ndarray


def _bound_violations(params: DcbmParams) -> list[str]:
    out = []
    if np.any(params.B < 0) or np.any(params.B > 1):
        out.append("B entries must lie in [0, 1]")
    for name in ("theta", "delta"):
        v = getattr(params, name)
        bad = np.flatnonzero((v <= 0) | (v > 1) | ~np.isfinite(v))
        if bad.size:
            out.append(f"{name} must lie in (0, 1]; violated at {bad[:10].tolist()}")
    sizes = np.bincount(params.labels, minlength=params.K)
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        out.append(f"empty communities: {empty.tolist()}")
    return out


def _irreducible(m: np.ndarray) -> bool:
    pattern = m > 1e-12
    if pattern.shape[0] == 1:
        return bool(pattern[0, 0])
    ncomp, _ = connected_components(pattern, directed=True, connection="strong")
    return ncomp == 1


def _nonsingular(m: np.ndarray) -> bool:
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[0] > 0 and s[-1] > 1e-12 * s[0])


def heterogeneity_terms(theta: np.ndarray, delta: np.ndarray) -> tuple[float, float]:
    """Return ``(Z, err_n)`` for the given heterogeneity vectors.

    ``Z = max(theta_max, delta_max) * max(|theta|_1, |delta|_1)`` and
    ``err_n = Z / min(delta_min^2 |theta|^2, theta_min^2 |delta|^2)``.
    """
    z = max(theta.max(), delta.max()) * max(theta.sum(), delta.sum())
    denom = min(delta.min() ** 2 * np.dot(theta, theta), theta.min() ** 2 * np.dot(delta, delta))
    return float(z), float(z / denom)


def validate(params: DcbmParams) -> DcbmDiagnostics:
    violations = _bound_violations(params)
    if violations:
        raise ParamsError(violations)
    B = params.B
    BBt, BtB = B @ B.T, B.T @ B
    flags = {
        "BBt_nonsingular": _nonsingular(BBt),
        "BtB_nonsingular": _nonsingular(BtB),
        "BBt_nonnegative": bool(np.all(BBt >= 0)),
        "BtB_nonnegative": bool(np.all(BtB >= 0)),
        "BBt_irreducible": _irreducible(BBt),
        "BtB_irreducible": _irreducible(BtB),
    }
    theta, delta = params.theta, params.delta
    z, err = heterogeneity_terms(theta, delta)
    tn, dn = params.community_norms(theta), params.community_norms(delta)
    # finite-n stand-in for log(n) Z / (theta_min delta_min |theta|_1 |delta|_1) -> 0
    cond = math.log(params.n) * z / (theta.min() * delta.min() * theta.sum() * delta.sum()) if params.n > 1 else math.inf
    return DcbmDiagnostics(
        Z=z,
        err_n=err,
        theta_norms=tn,
        delta_norms=dn,
        theta_norm_spread=float(tn.max() / tn.min()),
        delta_norm_spread=float(dn.max() / dn.min()),
        degree_condition=float(cond),
        flags=flags,
    )


def sample_adjacency(params: DcbmParams, seed: int, include_diagonal: bool = True,
                     chunk_rows: int = 1024) -> DirectedGraph:
    """Draw one adjacency matrix with independent Bernoulli entries.

    Uses a PCG64 stream seeded by ``seed``. Uniforms are consumed row-major,
    so the result does not depend on ``chunk_rows``.
    """
    violations = _bound_violations(params)
    if violations:
        raise ParamsError(violations)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = params.n
    src, dst = [], []
    for start in range(0, n, chunk_rows):
        rows = np.arange(start, min(start + chunk_rows, n))
        p = params.edge_probabilities(rows)
        hit = rng.random(p.shape) < p
        if not include_diagonal:
            hit[np.arange(rows.size), rows] = False
        r, c = np.nonzero(hit)
        src.append(r + start)
        dst.append(c)
    if not src:
        return DirectedGraph(0, [], [])
    return DirectedGraph(n, np.concatenate(src), np.concatenate(dst))


def expected_matrix(params: DcbmParams, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    if params.n > dense_limit:
        raise MemoryError(f"n={params.n} exceeds the dense limit {dense_limit}")
    return params.edge_probabilities()


def noise_matrix(a: DirectedGraph, params: DcbmParams, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    if a.n != params.n:
        raise ValueError(f"graph has {a.n} nodes but params describe {params.n}")
    return a.to_dense() - expected_matrix(params, dense_limit)


def theoretical_svd(params: DcbmParams) -> TheoreticalSvd:
    """Compact SVD of the expected adjacency matrix built from the K x K core.

    ``Omega = |theta| |delta| Theta_theta S Theta_delta^T`` where ``S = Psi_theta B
    Psi_delta`` and the Theta matrices hold ``theta(i) / |theta^(c_i)|`` in column
    ``c_i``. The SVD of S lifts to Omega row by row.
    """
    diag = validate(params)
    if not (diag.flags["BBt_irreducible"] and diag.flags["BtB_irreducible"]):
        raise ParamsError(["B B^T and B^T B must be irreducible for a positive leading singular pair"])
    if not (diag.flags["BBt_nonsingular"] and diag.flags["BtB_nonsingular"]):
        raise ParamsError(["B must be nonsingular"])
    K, lab = params.K, params.labels
    theta, delta = params.theta, params.delta
    th_norm, de_norm = np.linalg.norm(theta), np.linalg.norm(delta)
    th_k, de_k = params.community_norms(theta), params.community_norms(delta)
    psi_t = np.diag(th_k / th_norm)
    psi_d = np.diag(de_k / de_norm)
    S = psi_t @ params.B @ psi_d.T
    Y, lam, Ht = np.linalg.svd(S)
    H = Ht.T
    # joint sign flips keep S = Y diag(lam) H^T
    for k in range(K):
        if k == 0:
            s = np.sign(Y[:, 0].sum() + H[:, 0].sum())
        else:
            j = np.argmax(np.abs(Y[:, k]))
            s = np.sign(Y[j, k])
        if s < 0:
            Y[:, k] *= -1
            H[:, k] *= -1
    U = (theta / th_k[lab])[:, None] * Y[lab]
    V = (delta / de_k[lab])[:, None] * H[lab]
    return TheoreticalSvd(
        U=U, V=V, sigma=th_norm * de_norm * lam, S=S, Y=Y, H=H, Lambda_S=lam,
        Psi_theta=psi_t, Psi_delta=psi_d, labels=lab,
    )


def sample_theta_mixture(spec: Sequence[tuple[float, float]], n: int, seed) -> np.ndarray:
    """i.i.d. draws from a discrete distribution on heterogeneity values.

    Masses are normalised to sum to one; repeated values are merged.
    """
    if not spec:
        raise ValueError("mixture spec is empty")
    atoms: dict[float, float] = {}
    for value, prob in spec:
        value, prob = float(value), float(prob)
        if not (0 < value <= 1):
            raise ValueError(f"heterogeneity value {value} outside (0, 1]")
        if not prob > 0:
            raise ValueError(f"probability mass {prob} must be positive")
        atoms[value] = atoms.get(value, 0.0) + prob
    values = np.array(list(atoms), dtype=float)
    probs = np.array(list(atoms.values()), dtype=float)
    probs /= probs.sum()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return values[rng.choice(values.size, size=n, p=probs)]


def sample_labels(n: int, K: int, seed, proportions: Sequence[float] | None = None) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = None if proportions is None else np.asarray(proportions, float) / np.sum(proportions)
    return rng.choice(K, size=n, p=p).astype(np.int64)


def params_from_config(cfg: dict, seed: int | None = None) -> DcbmParams:
    """Build params from a config mapping.

    Keys: ``K``, ``B`` (row-major nested list), ``n``, either ``theta`` or
    ``theta_spec`` (list of ``[value, mass]``), either ``delta``, ``delta_spec``
    or ``delta_same_as_theta``, and ``labels`` or ``label_proportions``.
    """
    K = int(cfg["K"])
    B = np.asarray(cfg["B"], dtype=float).reshape(K, K)
    seed = cfg.get("seed", 0) if seed is None else seed
    rng = np.random.default_rng(seed)
    if "labels" in cfg:
        labels = np.asarray(cfg["labels"], dtype=np.int64)
        n = labels.size
    elif "n" in cfg:
        n = int(cfg["n"])
        labels = sample_labels(n, K, rng, cfg.get("label_proportions"))
    else:
        n = len(cfg["theta"])
        labels = sample_labels(n, K, rng, cfg.get("label_proportions"))
    if "theta" in cfg:
        theta = np.asarray(cfg["theta"], dtype=float)
    else:
        theta = sample_theta_mixture([tuple(a) for a in cfg["theta_spec"]], n, rng)
    if "delta" in cfg:
        delta = np.asarray(cfg["delta"], dtype=float)
    elif "delta_spec" in cfg:
        delta = sample_theta_mixture([tuple(a) for a in cfg["delta_spec"]], n, rng)
    else:
        delta = theta.copy()
    return DcbmParams(K=K, B=B, theta=theta, delta=delta, labels=labels)


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(text)
    return json.loads(text)
