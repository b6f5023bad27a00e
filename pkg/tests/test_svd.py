import numpy as np
import pytest

from nmfdescent.model import StopRule
from nmfdescent.solvers import Algorithm, SolverConfig, run
from nmfdescent.svd import (SvdConvergenceError, nonneg_part_baseline, rank_one_global,
                            saddle_probe, svd, truncate, truncation_error)


def check_svd(A, tol=1e-10):
    s = svd(A)
    P, Q = s.left, s.right
    assert np.abs(P.T @ P - np.eye(P.shape[0])).max() <= tol
    assert np.abs(Q.T @ Q - np.eye(Q.shape[0])).max() <= tol
    assert np.linalg.norm(A - P @ s.diag() @ Q.T) <= tol * max(np.linalg.norm(A), 1e-300)
    assert (np.diff(s.singulars) <= 0).all() and (s.singulars >= 0).all()
    return s


def test_diagonal_and_rank_one(rng):
    s = check_svd(np.diag([1.0, -3.0, 2.0]))
    assert np.allclose(s.singulars, [3, 2, 1])
    u, v = rng.random(4), rng.random(3)
    s = check_svd(np.outer(u, v))
    assert s.singulars[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
    assert np.abs(s.singulars[1:]).max() <= 1e-12 * s.singulars[0]


def test_random_shapes_match_numpy():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m, n = rng.integers(1, 31), rng.integers(1, 21)
        A = rng.standard_normal((m, n))
        s = check_svd(A)
        ref = np.linalg.svd(A, compute_uv=False)
        assert np.allclose(s.singulars[:ref.size], ref, atol=1e-12 * ref[0])


def test_zero_matrix():
    s = check_svd(np.zeros((3, 2)))
    assert not s.singulars.any()


def test_iteration_cap():
    A = np.random.default_rng(0).standard_normal((6, 5))
    with pytest.raises(SvdConvergenceError):
        svd(A, max_sweeps=1)


def test_truncate_examples(rng):
    A = np.diag([3.0, 2.0])
    s = svd(A)
    A1 = truncate(s, 1)
    assert np.allclose(A1, [[3, 0], [0, 0]])
    assert np.sum((A - A1) ** 2) == pytest.approx(4)
    assert np.allclose(truncate(s, 2), A)
    with pytest.raises(ValueError):
        truncate(s, 3)
    B = rng.random((6, 4))
    s = svd(B)
    assert 0.5 * np.sum((B - truncate(s, 2)) ** 2) == pytest.approx(truncation_error(s, 2), rel=1e-10)


def test_eckart_young(rng):
    A = rng.standard_normal((7, 5))
    best = np.linalg.norm(A - truncate(svd(A), 2))
    for _ in range(100):
        M = rng.standard_normal((7, 2)) @ rng.standard_normal((2, 5))
        assert best <= np.linalg.norm(A - M) + 1e-12


def test_nonneg_part(rng):
    X = rng.random((6, 2)) @ rng.random((2, 5))
    assert nonneg_part_baseline(X, 2)[1] <= 1e-12
    for _ in range(10):
        A = rng.random((8, 6))
        Ap, err = nonneg_part_baseline(A, 3)
        assert (Ap >= 0).all()
        assert err <= np.linalg.norm(A - truncate(svd(A), 3)) + 1e-12


def test_error_chain_with_rri(rng):
    A = rng.random((12, 9))
    rep = run(A, SolverConfig(Algorithm.RRI, rank=2, stop=StopRule(epsilon_rel=1e-8)))
    _, err_pos = nonneg_part_baseline(A, 2)
    err_svd = np.linalg.norm(A - truncate(svd(A), 2))
    err_nmf = np.linalg.norm(A - rep.final.U @ rep.final.V.T)
    assert err_pos <= err_svd <= err_nmf + 1e-10


def test_rank_one_global_cases(rng):
    a, b = rng.random(4), rng.random(3)
    u, v = rank_one_global(np.outer(a, b))
    assert np.allclose(np.outer(u, v), np.outer(a, b))
    u, v = rank_one_global(np.diag([3.0, 2.0]))
    assert np.allclose(u, [np.sqrt(3), 0]) and np.allclose(v, [np.sqrt(3), 0])
    assert np.sum((np.diag([3.0, 2.0]) - np.outer(u, v)) ** 2) == pytest.approx(4)
    with pytest.raises(ValueError):
        rank_one_global(-np.ones((2, 2)))


def test_rank_one_eigen_residual(rng):
    A = rng.random((9, 7))
    u, v = rank_one_global(A)
    sigma = (u @ u) * (v @ v)
    assert np.linalg.norm(A @ A.T @ u - sigma * u) <= 1e-8 * np.linalg.norm(u) * max(sigma, 1)


def test_saddle_probe_nondominant():
    w = saddle_probe(np.diag([3.0, 2.0, 1.0]), 1, kept=[1])
    assert w.eps == pytest.approx(0.1)
    assert w.err_lower < w.err_stationary < w.err_upper
    assert w.is_saddle and w.swapped == (1, 0)


def test_saddle_probe_dominant_and_zero_eps():
    w = saddle_probe(np.diag([3.0, 2.0, 1.0]), 1)
    assert not w.decrease_found
    w = saddle_probe(np.diag([3.0, 2.0, 1.0]), 1, kept=[2], eps=0.0)
    assert w.err_lower == pytest.approx(w.err_stationary)
    assert w.err_upper == pytest.approx(w.err_stationary)
    with pytest.raises(ValueError):
        saddle_probe(np.diag([3.0, 2.0, 1.0]), 2, kept=[1, 1])
