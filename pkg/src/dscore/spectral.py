"""Leading singular vectors and the regularized graph Laplacian."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, svds

from .graph import DirectedGraph, degrees

log = logging.getLogger(__name__)

DENSE_SVD_LIMIT = 600


class SvdConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class SingularTriple:
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    warnings: tuple = field(default=())

    @property
    def k(self) -> int:
        return self.sigma.size

    def restrict(self, rows) -> "SingularTriple":
        """Keep only the given rows of U and V."""
        return SingularTriple(self.U[rows], self.V[rows], self.sigma, self.warnings)


@dataclass(frozen=True)
class LaplacianConfig:
    tau: float | None = None

    def __post_init__(self):
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")


def _fix_signs(U: np.ndarray, V: np.ndarray) -> None:
    # pairs are flipped together so that M V = U diag(sigma) still holds
    for k in range(U.shape[1]):
        if k == 0:
            s = U[:, 0].sum() + V[:, 0].sum()
        else:
            j = np.argmax(np.abs(U[:, k]))
            s = U[j, k]
        if s < 0:
            U[:, k] *= -1
            V[:, k] *= -1


def _residuals(m, U, V, sigma) -> np.ndarray:
    r = m @ V - U * sigma
    return np.linalg.norm(r, axis=0)


def top_k_svd(m, K: int, tol: float = 1e-10, max_iter: int = 300, seed: int = 0,
              dense_limit: int = DENSE_SVD_LIMIT) -> SingularTriple:
    """Top-``K`` singular triple of a square (sparse or dense) matrix.

    Small matrices go through a full LAPACK SVD. Larger ones use implicitly
    restarted Lanczos (ARPACK) with a seeded start vector. Every returned
    column satisfies ``|M v_k - sigma_k u_k| <= tol * sigma_1``.
    """
    n = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not 1 <= K <= n:
        raise ValueError(f"K={K} must satisfy 1 <= K <= n={n}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    warnings = []
    want = min(K + 1, n)
    if n <= dense_limit or want >= n - 1:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
        u, s, vt = np.linalg.svd(dense)
        U, sigma, V = u[:, :want], s[:want], vt[:want].T
    else:
        mat = sp.csr_matrix(m, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            u, s, vt = svds(mat, k=want, tol=tol * 1e-2, maxiter=max_iter, v0=v0)
        except ArpackNoConvergence as exc:
            raise SvdConvergenceError(f"ARPACK did not converge for K={K}") from exc
        order = np.argsort(s)[::-1]
        U, sigma, V = u[:, order], s[order], vt[order].T
    U, V = np.array(U[:, :K]), np.array(V[:, :K])
    extra = sigma[K] if sigma.size > K else None
    sigma = np.array(sigma[:K])
    _fix_signs(U, V)
    if sigma[0] > 0:
        res = _residuals(m, U, V, sigma)
        if np.any(res > tol * sigma[0]):
            raise SvdConvergenceError(
                f"singular triple residuals {res.max():.3g} exceed tolerance", residuals=res
            )
        if sigma[-1] <= 1e-12 * sigma[0]:
            warnings.append("rank_deficient")
        if extra is not None and sigma[-1] - extra <= 1e-8 * sigma[0]:
            warnings.append("degenerate_gap")
    else:
        warnings.append("rank_deficient")
    if warnings:
        log.debug("top_k_svd warnings: %s", warnings)
    return SingularTriple(U, V, sigma, tuple(warnings))


def regularized_laplacian(g: DirectedGraph, cfg: LaplacianConfig | None = None) -> sp.csr_matrix:
    """``L = O^{-1/2} A P^{-1/2}`` with ``O = tau + out-degree``, ``P = tau + in-degree``.

    ``tau`` defaults to the average degree ``|E| / n``.
    """
    cfg = cfg or LaplacianConfig()
    if g.n < 1:
        raise ValueError("graph has no nodes")
    tau = g.n_edges / g.n if cfg.tau is None else float(cfg.tau)
    out, inn = degrees(g)
    o, p = tau + out, tau + inn
    if tau == 0:
        # a one-sided zero only blanks a row or column; an isolated node has no scale at all
        zero = np.flatnonzero(out + inn == 0)
        if zero.size:
            raise ZeroDivisionError(f"tau=0 and node {int(zero[0])} has no edges")
    with np.errstate(divide="ignore"):
        left = np.where(o > 0, 1.0 / np.sqrt(o), 0.0)
        right = np.where(p > 0, 1.0 / np.sqrt(p), 0.0)
    return (sp.diags(left) @ g.adjacency @ sp.diags(right)).tocsr()
