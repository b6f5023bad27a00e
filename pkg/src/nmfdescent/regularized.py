"""Rank-one residue iteration with per-column regularization.

For a column ``v`` fitted against the residue ``R`` and partner ``u`` the
penalized subproblem

    1/2 ||R - u v^T||^2 + beta ||v||_1 + gamma/2 ||v||^2 + delta/2 ||v - B v_hat||^2

(``v_hat`` the current value of the column) has the closed-form minimizer

    v = [R^T u - beta 1 + delta B v_hat]_+ / (||u||^2 + gamma + delta).
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from .linalg import as_matrix
from .model import (StopReason, StopRule, gradients, init_scaled,
                    objective, projected_gradient, rescale_columns, should_stop)
from .solvers import (STALL_REL_DECREASE, STALL_SWEEPS, SolverReport,
                      SubstitutionBudget, TracePoint, _plain_rule, residue_sweep)


def build_smoothing_matrix(n):
    """Neighbour-averaging matrix on a chain of `n` points.

    Interior rows average the two neighbours; the end rows copy their single
    neighbour. Every row sums to one.
    """
    if n < 2:
        raise ValueError("smoothing matrix needs n >= 2")
    B = np.zeros((n, n))
    B[0, 1] = 1.0
    B[-1, -2] = 1.0
    i = np.arange(1, n - 1)
    B[i, i - 1] = 0.5
    B[i, i + 1] = 0.5
    return B


def _check_partner(u):
    u = np.asarray(u, dtype=np.float64)
    uu = float(u @ u)
    return u, uu


def update_l1(R, u, beta):
    """Sparse update ``[R^T u - beta]_+ / ||u||^2``."""
    u, uu = _check_partner(u)
    if uu == 0:
        raise ValueError("update undefined for a zero partner column")
    return np.maximum(np.asarray(R).T @ u - beta, 0.0) / uu


def update_smooth(R, u, delta, v_hat, B):
    """Smoothing update ``[R^T u + delta B v_hat]_+ / (||u||^2 + delta)``."""
    u, uu = _check_partner(u)
    if uu + delta <= 0:
        raise ValueError("update undefined: ||u||^2 + delta must be positive")
    return np.maximum(np.asarray(R).T @ u + delta * (B @ v_hat), 0.0) / (uu + delta)


def _combined(rt, uu, beta, gamma, delta, v_hat, B):
    den = uu + gamma + delta
    if den <= 0:
        return np.zeros_like(rt)
    num = rt - beta
    if delta:
        num = num + delta * (B @ v_hat)
    return np.maximum(num, 0.0) / den


def update_combined(R, u, v_hat, beta=0.0, gamma=0.0, delta=0.0, B=None):
    """Update with one-norm, two-norm and smoothing penalties together.

    The two-norm weight `gamma` enters the denominator, as the gradient of
    ``gamma/2 ||v||^2`` requires.
    """
    u, uu = _check_partner(u)
    rt = np.asarray(R).T @ u
    if delta and B is None:
        B = build_smoothing_matrix(rt.size)
    return _combined(rt, uu, beta, gamma, delta, np.asarray(v_hat, dtype=np.float64), B)


@dataclass
class RegularizerSpec:
    """Per-column penalty weights applied to the columns of one factor.

    Scalars are broadcast to every column. `factor` selects which factor is
    regularized, ``"u"`` (columns of length m) or ``"v"``.
    """

    l1_beta: object = 0.0
    smooth_delta: object = 0.0
    two_norm_gamma: object = 0.0
    smoothing: np.ndarray | None = None
    factor: str = "u"

    def __post_init__(self):
        if self.factor not in ("u", "v"):
            raise ValueError("factor must be 'u' or 'v'")
        if self.smoothing is not None:
            B = np.asarray(self.smoothing, dtype=np.float64)
            if (B < 0).any() or not np.allclose(B.sum(axis=1), 1.0):
                raise ValueError("smoothing matrix must be nonnegative and row-stochastic")
            self.smoothing = B

    def weights(self, r):
        out = []
        for w in (self.l1_beta, self.two_norm_gamma, self.smooth_delta):
            w = np.broadcast_to(np.asarray(w, dtype=np.float64), (r,)).copy()
            if (w < 0).any() or not np.isfinite(w).all():
                raise ValueError("regularization weights must be finite and >= 0")
            out.append(w)
        return out

    def matrix(self, n):
        if self.smoothing is not None:
            if self.smoothing.shape != (n, n):
                raise ValueError(f"smoothing matrix must be {n}x{n}")
            return self.smoothing
        return build_smoothing_matrix(n)


def _column_penalty(X, beta, gamma, delta, B):
    pen = float(beta @ np.abs(X).sum(axis=0) + 0.5 * gamma @ (X * X).sum(axis=0))
    if delta.any():
        D = X - B @ X
        pen += 0.5 * float(delta @ (D * D).sum(axis=0))
    return pen


def regularized_objective(A, fp, spec):
    """NMF objective plus the penalties, smoothing measured as ``||x - B x||``."""
    X = fp.U if spec.factor == "u" else fp.V
    beta, gamma, delta = spec.weights(X.shape[1])
    B = spec.matrix(X.shape[0]) if delta.any() else None
    return objective(A, fp) + _column_penalty(X, beta, gamma, delta, B)


def regularized_gradients(A, fp, spec):
    """Gradient whose projected version vanishes at fixed points of the update."""
    kkt = gradients(A, fp)
    gu, gv = kkt.grad_u, kkt.grad_v
    X = fp.U if spec.factor == "u" else fp.V
    beta, gamma, delta = spec.weights(X.shape[1])
    extra = beta + gamma * X
    if delta.any():
        extra = extra + delta * (X - spec.matrix(X.shape[0]) @ X)
    if spec.factor == "u":
        gu = gu + extra
    else:
        gv = gv + extra
    return gu, gv


def regularized_sweep(A, fp, spec, budget=None):
    X = fp.U if spec.factor == "u" else fp.V
    r = X.shape[1]
    beta, gamma, delta = spec.weights(r)
    B = spec.matrix(X.shape[0]) if delta.any() else None
    active = (beta > 0) | (gamma > 0) | (delta > 0)

    def rule(t, rt, xx, y_old):
        if not active[t]:
            return _plain_rule(t, rt, xx, y_old)
        return _combined(rt, xx, beta[t], gamma[t], delta[t], y_old, B)

    if spec.factor == "u":
        return residue_sweep(A, fp, u_rule=rule, budget=budget)
    return residue_sweep(A, fp, v_rule=rule, budget=budget)


def run_regularized(A, r, spec, stop=None, seed=0, start=None):
    """RRI with regularized updates on the columns chosen by `spec`.

    Unpenalized column pairs are rebalanced after each sweep as in
    :func:`~nmfdescent.solvers.run`; penalized ones are not, since their
    penalty depends on scale. The trace records the regularized objective
    and the projected norm of :func:`regularized_gradients`.
    """
    A = as_matrix(A)
    if (A < 0).any():
        raise ValueError("input matrix has negative entries")
    stop = StopRule() if stop is None else stop
    fp = start.copy() if start is not None else init_scaled(A, r, seed)
    beta, gamma, delta = spec.weights(r)
    free = ~((beta > 0) | (gamma > 0) | (delta > 0))
    budget = SubstitutionBudget(r)

    def pgrad(fp):
        gu, gv = regularized_gradients(A, fp, spec)
        pu, pv = projected_gradient(fp.U, gu), projected_gradient(fp.V, gv)
        return float(np.sqrt(np.sum(pu * pu) + np.sum(pv * pv))), gu, gv

    pg, gu, gv = pgrad(fp)
    initial = float(np.sqrt(np.sum(gu * gu) + np.sum(gv * gv)))
    rule = replace(stop, initial_pgrad_norm=initial)
    obj = regularized_objective(A, fp, spec)
    trace = [TracePoint(0, 0.0, obj, pg)]
    t0 = time.perf_counter()
    reason = should_stop(rule, pg, 0.0, 0)
    sweeps = flat = 0
    while reason is None:
        fp = regularized_sweep(A, fp, spec, budget)
        fp = rescale_columns(fp, mask=free)
        sweeps += 1
        pg, _, _ = pgrad(fp)
        prev, obj = obj, regularized_objective(A, fp, spec)
        elapsed = time.perf_counter() - t0
        trace.append(TracePoint(sweeps, elapsed, obj, pg))
        reason = should_stop(rule, pg, elapsed, sweeps)
        flat = flat + 1 if prev - obj < STALL_REL_DECREASE * prev else 0
        if reason is None and flat >= STALL_SWEEPS:
            reason = StopReason.STALLED
    return SolverReport(fp, trace, reason, budget.used, initial)
