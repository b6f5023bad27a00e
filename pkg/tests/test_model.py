import numpy as np
import pytest

from nmfdescent.model import (FactorPair, StopReason, StopRule, balance_factors,
                              fit_scale, gradients, init_scaled, objective,
                              projected_gradient_norm, rescale_columns, residual_objective,
                              scale_start, should_stop)
from nmfdescent.solvers import Algorithm, SolverConfig, run
from nmfdescent.svd import svd

from conftest import central_diff


def test_objective_examples(rng):
    u, v = rng.random((4, 1)), rng.random((3, 1))
    assert objective(u @ v.T, FactorPair(u, v)) == pytest.approx(0, abs=1e-14)
    assert objective([[2.0]], FactorPair([[1.0]], [[1.0]])) == 0.5
    A = rng.random((4, 3))
    assert objective(A, FactorPair(np.zeros((4, 2)), np.zeros((3, 2)))) == pytest.approx(
        0.5 * np.sum(A * A))


def test_objective_forms_agree(rng):
    A = rng.random((7, 5))
    fp = FactorPair(rng.random((7, 3)), rng.random((5, 3)))
    assert objective(A, fp) == pytest.approx(residual_objective(A, fp), rel=1e-12)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        objective(np.ones((3, 3)), FactorPair(np.ones((2, 1)), np.ones((3, 1))))


def test_gradients_finite_differences(rng):
    A = rng.random((4, 3))
    U, V = rng.random((4, 2)), rng.random((3, 2))
    kkt = gradients(A, FactorPair(U, V))
    gu = central_diff(lambda X: objective(A, FactorPair(X, V)), U)
    gv = central_diff(lambda X: objective(A, FactorPair(U, X)), V)
    assert np.linalg.norm(kkt.grad_u - gu) <= 1e-5 * np.linalg.norm(gu)
    assert np.linalg.norm(kkt.grad_v - gv) <= 1e-5 * np.linalg.norm(gv)


def test_gradient_at_zero_and_at_svd_point(rng):
    A = rng.random((3, 3))
    kkt = gradients(A, FactorPair(np.zeros((3, 2)), np.zeros((3, 2))))
    assert not kkt.grad_u.any() and not kkt.grad_v.any()
    # rank-2 positive matrix; the dominant pair scaled into U, V is interior stationary
    B = rng.random((3, 2)) @ rng.random((2, 3)) + 0.1
    s = svd(B)
    U = s.left[:, :1] * np.sqrt(s.singulars[0])
    V = s.right[:, :1] * np.sqrt(s.singulars[0])
    if U.sum() < 0:
        U, V = -U, -V
    kkt = gradients(B, FactorPair(U, V))
    assert np.abs(kkt.grad_u).max() <= 1e-10 * np.linalg.norm(B)


def test_projected_gradient_rules():
    fp = FactorPair(np.array([[0.0], [0.0], [2.0]]), np.zeros((1, 1)))

    class K:
        grad_u = np.array([[5.0], [-5.0], [5.0]])
        grad_v = np.zeros((1, 1))
    assert projected_gradient_norm(fp, K) ** 2 == pytest.approx(50.0)


def test_rescale_examples(rng):
    U = np.array([[4.0], [0.0]])
    V = np.array([[1.0], [0.0], [0.0]])
    out = rescale_columns(FactorPair(U, V))
    assert balance_factors(U, V)[0] == pytest.approx(0.5)
    assert np.linalg.norm(out.U) == pytest.approx(2) and np.linalg.norm(out.V) == pytest.approx(2)
    fp = FactorPair(rng.random((5, 3)), rng.random((4, 3)))
    fp = rescale_columns(fp)
    again = rescale_columns(fp)
    assert np.allclose(again.U, fp.U, rtol=1e-14)
    A = rng.random((5, 4))
    fp = FactorPair(rng.random((5, 3)) * 7, rng.random((4, 3)))
    out = rescale_columns(fp)
    P = fp.U @ fp.V.T
    assert np.linalg.norm(out.U @ out.V.T - P) <= 1e-12 * np.linalg.norm(P)
    assert objective(A, out) == pytest.approx(objective(A, fp), rel=1e-12)


def test_rescale_zero_column_passthrough():
    U = np.array([[1.0, 0.0], [2.0, 0.0]])
    V = np.array([[3.0, 5.0]])
    assert np.array_equal(balance_factors(U, V)[1:], [1.0])
    out = rescale_columns(FactorPair(U, V))
    assert np.array_equal(out.V[:, 1], V[:, 1])


def test_scale_start_hand_case():
    fp = scale_start([[2.0]], [[1.0]], [[1.0]])
    U, V = fp.U, fp.V
    assert U[0, 0] == pytest.approx(np.sqrt(2)) and V[0, 0] == pytest.approx(np.sqrt(2))


def test_init_scaled_deterministic(rng):
    A = rng.random((6, 5))
    a, b = init_scaled(A, 2, 9), init_scaled(A, 2, 9)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    assert fit_scale(A, a) == pytest.approx(1.0)
    assert a.is_nonneg()


def test_scale_factor_tends_to_one_at_convergence(rng):
    A = rng.random((10, 8))
    rep = run(A, SolverConfig(Algorithm.RRI, rank=3, stop=StopRule(epsilon_rel=1e-7)))
    assert fit_scale(A, rep.final) == pytest.approx(1.0, abs=1e-6)


def test_should_stop_rules():
    rule = StopRule(epsilon_rel=1e-3, initial_pgrad_norm=1.0, max_seconds=45)
    assert should_stop(rule, 0.0, 0, 0) is StopReason.CRITERION
    assert should_stop(rule, 1e-2, 1.0, 5) is None
    assert should_stop(rule, 1e-2, 46.0, 5) is StopReason.TIME_BUDGET
    rule = StopRule(epsilon_rel=1e-3, initial_pgrad_norm=1.0, max_sweeps=5)
    assert should_stop(rule, 1e-2, 0, 5) is StopReason.SWEEP_BUDGET


def test_stop_rule_validation():
    with pytest.raises(ValueError):
        StopRule(epsilon_rel=0)
