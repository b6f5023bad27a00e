"""Objective, gradients and stopping rule of the NMF problem

    min_{U >= 0, V >= 0}  1/2 ||A - U V^T||_F^2

shared by every solver in the package.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import ShapeError, as_matrix, frobenius_inner


@dataclass
class FactorPair:
    """Nonnegative factors ``U`` (m x r) and ``V`` (n x r)."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        self.U = as_matrix(self.U)
        self.V = as_matrix(self.V)
        if self.U.shape[1] != self.V.shape[1]:
            raise ShapeError(
                f"U has {self.U.shape[1]} columns, V has {self.V.shape[1]}")

    @property
    def rank(self):
        return self.U.shape[1]

    def copy(self):
        return FactorPair(self.U.copy(order="F"), self.V.copy(order="F"))

    def product(self):
        return self.U @ self.V.T

    def is_nonneg(self):
        return bool((self.U >= 0).all() and (self.V >= 0).all())


@dataclass
class KktResidual:
    """Gradients of the objective at a point, plus complementarity summary.

    The KKT multipliers are ``-grad_u`` and ``-grad_v``.
    """

    grad_u: np.ndarray
    grad_v: np.ndarray
    min_grad_entry: float
    max_complementarity: float


class StopReason(enum.Enum):
    CRITERION = "Criterion"
    TIME_BUDGET = "TimeBudget"
    SWEEP_BUDGET = "SweepBudget"
    STALLED = "Stalled"


@dataclass
class StopRule:
    epsilon_rel: float = 1e-4
    initial_pgrad_norm: float = float("nan")
    max_seconds: float = 45.0
    max_sweeps: int = 10**6

    def __post_init__(self):
        if not self.epsilon_rel > 0:
            raise ValueError("epsilon_rel must be positive")
        if not (self.max_seconds > 0 and self.max_sweeps > 0):
            raise ValueError("budgets must be positive")


def _check_shapes(A, fp):
    m, n = A.shape
    if fp.U.shape[0] != m or fp.V.shape[0] != n:
        raise ShapeError(
            f"A is {m}x{n} but U is {fp.U.shape} and V is {fp.V.shape}")


def objective(A, fp):
    """Return ``1/2 ||A - U V^T||_F^2``.

    Evaluated as ``1/2 (||A||^2 - 2 <U, AV> + <U, U (V^T V)>)`` so the
    m x n product is never formed. Tiny negative values from cancellation
    are clipped to zero.
    """
    A = np.asarray(A, dtype=np.float64)
    _check_shapes(A, fp)
    U, V = fp.U, fp.V
    val = (frobenius_inner(A, A) - 2.0 * frobenius_inner(U, A @ V)
           + frobenius_inner(U, U @ (V.T @ V)))
    return max(0.5 * val, 0.0)


def residual_objective(A, fp):
    """``1/2 ||A - U V^T||_F^2`` from the explicit residual (exact near 0)."""
    A = np.asarray(A, dtype=np.float64)
    _check_shapes(A, fp)
    R = A - fp.U @ fp.V.T
    return 0.5 * frobenius_inner(R, R)


def gradients(A, fp):
    """Gradients ``U V^T V - A V`` and ``V U^T U - A^T U`` with KKT summary."""
    A = np.asarray(A, dtype=np.float64)
    _check_shapes(A, fp)
    U, V = fp.U, fp.V
    grad_u = U @ (V.T @ V) - A @ V
    grad_v = V @ (U.T @ U) - A.T @ U
    min_entry = min(grad_u.min(initial=np.inf), grad_v.min(initial=np.inf))
    comp = max(np.abs(U * grad_u).max(initial=0.0),
               np.abs(V * grad_v).max(initial=0.0))
    return KktResidual(grad_u, grad_v, float(min_entry), float(comp))


def projected_gradient(X, grad):
    """Gradient with entries at ``X == 0`` replaced by ``min(0, grad)``."""
    return np.where(X > 0, grad, np.minimum(grad, 0.0))


def projected_gradient_norm(fp, kkt):
    pu = projected_gradient(fp.U, kkt.grad_u)
    pv = projected_gradient(fp.V, kkt.grad_v)
    return float(np.sqrt(frobenius_inner(pu, pu) + frobenius_inner(pv, pv)))


def gradient_norm(kkt):
    return float(np.sqrt(frobenius_inner(kkt.grad_u, kkt.grad_u)
                         + frobenius_inner(kkt.grad_v, kkt.grad_v)))


def balance_factors(U, V):
    """Diagonal ``D`` with ``D_ii = sqrt(||V_:i|| / ||U_:i||)``; 1 on zero columns."""
    nu = np.linalg.norm(U, axis=0)
    nv = np.linalg.norm(V, axis=0)
    ok = (nu > 0) & (nv > 0)
    d = np.ones(U.shape[1])
    d[ok] = np.sqrt(nv[ok] / nu[ok])
    return d


def rescale_columns(fp, mask=None):
    """Rescale column pairs so that ``||U_:i|| == ||V_:i||``.

    Returns ``(U D, V D^-1)``; the product ``U V^T`` is unchanged. Columns
    where either factor is zero are left alone, as are columns with
    ``mask[i]`` false when a mask is given.
    """
    d = balance_factors(fp.U, fp.V)
    if mask is not None:
        d = np.where(mask, d, 1.0)
    return FactorPair(fp.U * d, fp.V / d)


def scale_start(A, U, V):
    """Balance raw factors and scale them to best fit `A` in the least-squares sense.

    ``alpha = <A, U V^T> / <U V^T, U V^T>``; returns
    ``(U D sqrt(alpha), V D^-1 sqrt(alpha))``.
    """
    A = np.asarray(A, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    d = balance_factors(U, V)
    P = U @ V.T
    pp = frobenius_inner(P, P)
    alpha = frobenius_inner(A, P) / pp if pp > 0 else 1.0
    s = np.sqrt(max(alpha, 0.0))
    return FactorPair(U * d * s, V / d * s)


def fit_scale(A, fp):
    """The factor ``alpha`` by which ``U V^T`` would be rescaled to best fit `A`."""
    P = fp.product()
    return frobenius_inner(np.asarray(A, dtype=np.float64), P) / frobenius_inner(P, P)


def init_scaled(A, r, seed):
    """Seeded uniform(0, 1) start, balanced and scaled by :func:`scale_start`."""
    if r < 1:
        raise ValueError("rank must be at least 1")
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    rng = np.random.default_rng(seed)
    U = rng.random((m, r))
    V = rng.random((n, r))
    return scale_start(A, U, V)


def should_stop(rule, current_pgrad, elapsed, sweeps):
    """Return the :class:`StopReason` that applies, or None to continue."""
    if current_pgrad <= rule.epsilon_rel * rule.initial_pgrad_norm:
        return StopReason.CRITERION
    if elapsed > rule.max_seconds:
        return StopReason.TIME_BUDGET
    if sweeps >= rule.max_sweeps:
        return StopReason.SWEEP_BUDGET
    return None
