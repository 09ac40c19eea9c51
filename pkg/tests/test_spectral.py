import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import subspace_angles

from conftest import random_graph, random_params
from dscore.graph import DirectedGraph, degrees
from dscore.model import expected_matrix, theoretical_svd
from dscore.spectral import LaplacianConfig, SvdConvergenceError, regularized_laplacian, top_k_svd


def _residual_ok(m, sv, tol=1e-10):
    r = np.linalg.norm(m @ sv.V - sv.U * sv.sigma, axis=0)
    return np.all(r <= tol * sv.sigma[0])


def test_identity():
    sv = top_k_svd(np.eye(3), 2)
    assert np.allclose(sv.sigma, [1, 1])
    assert _residual_ok(np.eye(3), sv)
    assert "degenerate_gap" in sv.warnings


def test_rank_one():
    x, y = np.arange(1.0, 6.0), np.linspace(0.5, 2.0, 5)
    sv = top_k_svd(np.outer(x, y), 1)
    assert sv.sigma[0] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y), rel=1e-12)
    assert np.all(sv.U[:, 0] > 0) and np.all(sv.V[:, 0] > 0)


def test_rank_deficient_warning():
    x = np.arange(1.0, 6.0)
    sv = top_k_svd(np.outer(x, x), 2)
    assert "rank_deficient" in sv.warnings


def test_bad_arguments():
    with pytest.raises(ValueError):
        top_k_svd(np.eye(3), 4)
    with pytest.raises(ValueError):
        top_k_svd(np.eye(3), 0)
    with pytest.raises(ValueError):
        top_k_svd(np.ones((2, 3)), 1)
    with pytest.raises(ValueError):
        top_k_svd(np.eye(3), 1, tol=0)


def test_against_theoretical(rng):
    for _ in range(5):
        p = random_params(rng, K=3, n=200)
        t = theoretical_svd(p)
        sv = top_k_svd(expected_matrix(p), 3)
        assert np.allclose(sv.sigma, t.sigma, rtol=1e-8, atol=0)
        assert np.max(subspace_angles(sv.U, t.U)) < 1e-6
        assert np.max(subspace_angles(sv.V, t.V)) < 1e-6


@pytest.mark.parametrize("dense_limit", [0, 10_000])
def test_matches_full_svd(rng, dense_limit):
    # dense_limit=0 forces the Lanczos route
    g = random_graph(rng, 300, 0.05)
    sv = top_k_svd(g.adjacency, 3, dense_limit=dense_limit)
    s = np.linalg.svd(g.to_dense().astype(float), compute_uv=False)
    assert np.allclose(sv.sigma, s[:3], rtol=1e-10)
    assert _residual_ok(g.adjacency, sv)
    assert np.allclose(sv.U.T @ sv.U, np.eye(3), atol=1e-8)
    assert np.allclose(sv.V.T @ sv.V, np.eye(3), atol=1e-8)
    assert sv.U[:, 0].sum() + sv.V[:, 0].sum() >= 0


def test_deterministic(rng):
    g = random_graph(rng, 200, 0.05)
    a = top_k_svd(g.adjacency, 2, dense_limit=0, seed=4)
    b = top_k_svd(g.adjacency, 2, dense_limit=0, seed=4)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.sigma, b.sigma)


def test_permutation_oracle(rng):
    for _ in range(10):
        g = random_graph(rng, 50, 0.15)
        m = g.to_dense().astype(float)
        sv = top_k_svd(m, 2)
        if "degenerate_gap" in sv.warnings:
            continue
        pr, pc = rng.permutation(50), rng.permutation(50)
        sp_ = top_k_svd(m[np.ix_(pr, pc)], 2)
        assert np.allclose(sp_.sigma, sv.sigma, rtol=1e-10)
        for k in range(2):
            for got, ref in ((sp_.U[:, k], sv.U[pr, k]), (sp_.V[:, k], sv.V[pc, k])):
                sign = np.sign(got @ ref)
                assert np.allclose(got, sign * ref, atol=1e-8)


def test_nonconvergence_reports_residuals():
    m = sp.random(400, 400, density=0.05, random_state=1, format="csr")
    with pytest.raises(SvdConvergenceError) as exc:
        top_k_svd(m, 3, dense_limit=0, max_iter=1)
    err = exc.value
    assert err.residuals is None or np.asarray(err.residuals).size == 3


def test_laplacian_examples():
    L = regularized_laplacian(DirectedGraph(2, [0], [1]), LaplacianConfig(0))
    assert L[0, 1] == pytest.approx(1.0)
    src = [i for i in range(3) for j in range(3) if i != j]
    dst = [j for i in range(3) for j in range(3) if i != j]
    L = regularized_laplacian(DirectedGraph(3, src, dst), LaplacianConfig(0)).toarray()
    assert np.allclose(L[~np.eye(3, dtype=bool)], 0.5)


def test_laplacian_zero_degree():
    with pytest.raises(ZeroDivisionError, match="node 2"):
        regularized_laplacian(DirectedGraph(3, [0, 1], [1, 0]), LaplacianConfig(0))
    # one-sided zeros are fine: the row or column is simply empty
    L = regularized_laplacian(DirectedGraph(3, [0, 1], [1, 2]), LaplacianConfig(0)).toarray()
    assert L[1, 2] == pytest.approx(1.0) and np.all(L[2] == 0)
    with pytest.raises(ValueError):
        LaplacianConfig(-1)


def test_laplacian_loop_oracle(rng):
    g = random_graph(rng, 40, 0.1)
    L = regularized_laplacian(g).toarray()
    a = g.to_dense()
    out, inn = degrees(g)
    tau = g.n_edges / g.n
    for i in range(40):
        for j in range(40):
            ref = a[i, j] / np.sqrt((tau + out[i]) * (tau + inn[j]))
            assert L[i, j] == pytest.approx(ref, abs=1e-15)
    assert L.min() >= 0 and L.max() <= 1


def test_laplacian_tau_monotone(rng):
    g = random_graph(rng, 30, 0.2)
    lo = regularized_laplacian(g, LaplacianConfig(1.0)).toarray()
    hi = regularized_laplacian(g, LaplacianConfig(2.0)).toarray()
    nz = lo > 0
    assert np.all(hi[nz] < lo[nz])
