import itertools

import numpy as np
import pytest

from nmfdescent.constraints import ConstraintSet, DiagonalFactorization, grri_sweep
from nmfdescent.tensor import (KruskalTensor, _substitute_term, contract_except, init_kruskal, kruskal_to_dense,
                               run_tensor_rri, tensor_error, tensor_rri_sweep)


def outer3(a, b, c):
    return np.einsum("i,j,k->ijk", a, b, c)


def test_contract_matrix_case(rng):
    R = rng.random((4, 3))
    u, v = rng.random(4), rng.random(3)
    assert np.allclose(contract_except(R, [None, v], 0), R @ v)
    assert np.allclose(contract_except(R, [u, None], 1), R.T @ u)


def test_contract_rank_one_identity(rng):
    a, b, c = (x / np.linalg.norm(x) for x in (rng.random(3), rng.random(4), rng.random(2)))
    assert np.allclose(contract_except(outer3(a, b, c), [a, b, None], 2), c)


def test_contract_against_loops(rng):
    T = rng.random((2, 2, 2))
    vs = [rng.random(2) for _ in range(3)]
    for t in range(3):
        ref = np.zeros(2)
        for idx in itertools.product(range(2), repeat=3):
            w = T[idx]
            for s in range(3):
                if s != t:
                    w *= vs[s][idx[s]]
            ref[idx[t]] += w
        assert np.abs(contract_except(T, vs, t) - ref).max() <= 1e-12


def test_contract_dimension_errors(rng):
    T = rng.random((2, 3, 4))
    with pytest.raises(ValueError):
        contract_except(T, [np.ones(2), np.ones(2), None], 2)
    with pytest.raises(ValueError):
        contract_except(T, [np.ones(2)], 0)


def test_kruskal_to_dense_cases(rng):
    S = KruskalTensor(np.zeros(2), [rng.random((3, 2)), rng.random((2, 2)), rng.random((2, 2))])
    assert not kruskal_to_dense(S).any()
    S = KruskalTensor([1.0], [np.eye(3)[:, [1]], np.eye(2)[:, [0]], np.eye(2)[:, [1]]])
    D = kruskal_to_dense(S)
    assert D[1, 0, 1] == 1 and D.sum() == 1
    S = KruskalTensor(rng.random(2), [rng.random((3, 2)), rng.random((2, 2)), rng.random((2, 2))])
    D = kruskal_to_dense(S)
    for j in itertools.product(range(3), range(2), range(2)):
        ref = sum(S.scales[i] * np.prod([S.factors[t][j[t], i] for t in range(3)])
                  for i in range(2))
        assert D[j] == pytest.approx(ref, abs=1e-15)


def test_rank_one_recovery():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        T = 2.5 * outer3(rng.random(5), rng.random(4), rng.random(3))
        S, trace = run_tensor_rri(T, 1, sweeps=5, seed=seed + 50)
        assert np.linalg.norm(T - kruskal_to_dense(S)) <= 1e-10
        assert len(trace) <= 6


def test_monotone_and_normalized():
    for seed in range(20):
        T = np.random.default_rng(seed).random((4, 4, 4))
        S, trace = run_tensor_rri(T, 3, sweeps=30, seed=seed)
        assert (np.diff(trace) <= 1e-12 * np.sum(T * T)).all()
        for F in S.factors:
            live = S.scales > 0
            assert np.allclose(np.linalg.norm(F[:, live], axis=0), 1, atol=1e-12)
            assert (F >= 0).all()


def test_per_update_optimality(rng):
    T = rng.random((3, 4, 3))
    S = tensor_rri_sweep(T, init_kruskal(T.shape, 2, 0))
    # the last step refit (sigma_1, u_{2,1}); perturbing that factor cannot help
    base = np.linalg.norm(T - kruskal_to_dense(S))
    others = S.copy()
    others.scales[1] = 0
    R = T - kruskal_to_dense(others)
    w = np.einsum("i,j->ij", S.factors[0][:, 1], S.factors[1][:, 1])
    for _ in range(100):
        u = np.maximum(S.factors[2][:, 1] + 1e-2 * rng.standard_normal(3), 0)
        if not u.any():
            continue
        u /= np.linalg.norm(u)
        outer = np.einsum("ij,k->ijk", w, u)
        sigma = max(np.sum(R * outer), 0)
        assert np.linalg.norm(R - sigma * outer) >= base - 1e-12


def test_matrix_case_matches_grri(rng):
    A = rng.random((6, 5))
    S = init_kruskal((5, 6), 3, seed=1)
    f = DiagonalFactorization(S.factors[1].copy(), S.factors[0].copy(), S.scales.copy())
    cs = ConstraintSet.nonneg()
    for _ in range(30):
        S = tensor_rri_sweep(A.T, S)
        f = grri_sweep(A, f, cs, cs)
        assert np.abs(S.factors[0] - f.Y).max() <= 1e-10
        assert np.abs(S.factors[1] - f.X).max() <= 1e-10
        assert np.abs(S.scales - f.d).max() <= 1e-10


def test_zero_term_seeding():
    T = np.zeros((3, 2, 2))
    T[0] = 1.0
    T[1, 0, 0] = 0.5
    h = np.ones((2, 1)) / np.sqrt(2)
    e = np.eye(2)[:, [1]]
    # term 0 fits slice 0 exactly; term 1 is zero and points where the residue is zero
    S = KruskalTensor([2.0, 0.0], [np.eye(3)[:, [0, 0]], np.hstack([h, e]), np.hstack([h, e])])
    before = tensor_error(T, S)
    assert _substitute_term(T, S, 1)
    assert S.factors[0][1, 1] == 1
    assert tensor_error(T, S) == pytest.approx(0, abs=1e-24) and before > 0
    assert not _substitute_term(np.zeros((3, 2, 2)), S.copy(), 1)


def test_input_checks(rng):
    with pytest.raises(ValueError):
        run_tensor_rri(-np.ones((2, 2, 2)), 1)
    with pytest.raises(ValueError):
        tensor_rri_sweep(np.ones((2, 2, 2)), init_kruskal((2, 3, 2), 1))
    with pytest.raises(ValueError):
        KruskalTensor(np.ones(2), [np.ones((2, 1))])
