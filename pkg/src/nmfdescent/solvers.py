"""Descent methods for NMF behind a single :func:`run` entry point.

Available algorithms:

=========== ==============================================================
Mult        multiplicative updates
FLine       projected gradient + Armijo line search on (U, V) jointly
CLine       the same, alternating between U and V with adaptive inner tols
FFO         projected gradient with an adaptive Lipschitz estimate, joint
CFO         the same, alternating
ALS         alternating exact NNLS solves (active set)
RRI         rank-one residue iteration (closed-form column updates)
DampedRRI   RRI with a proximal damping term
=========== ==============================================================
"""

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .linalg import as_matrix, frobenius_inner, hadamard_div
from .model import (FactorPair, StopReason, StopRule, gradient_norm, gradients,
                    init_scaled, objective, projected_gradient,
                    projected_gradient_norm, rescale_columns, should_stop)
from .nnls import NnlsDegeneracyError, nnls_gram

ALPHA_FLOOR = 1e-20
L_CEILING = 1e300
MAX_EXPAND = 50
MAX_INNER = 1000
STALL_SWEEPS = 10
STALL_REL_DECREASE = 1e-15


class Algorithm(str, enum.Enum):
    MULT = "Mult"
    FLINE = "FLine"
    CLINE = "CLine"
    FFO = "FFO"
    CFO = "CFO"
    ALS = "ALS"
    RRI = "RRI"
    DAMPED_RRI = "DampedRRI"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("_", "").replace("-", "")
        for a in cls:
            if a.value.lower() == key:
                return a
        raise ValueError(f"unknown algorithm {name!r}")


class LineSearchStall(RuntimeError):
    """A step-size search could not make progress."""


@dataclass
class SolverConfig:
    algorithm: Algorithm = Algorithm.RRI
    rank: int = 2
    armijo_sigma: float = 0.01
    armijo_beta: float = 0.1
    fo_beta: float = 2.0
    damping_psi: float = 1.0
    inner_eps_u: float = 1e-3
    inner_eps_v: float = 1e-3
    substitution_budget: int | None = None   # None means `rank`
    stop: StopRule = field(default_factory=StopRule)
    seed: int = 0
    blocked_order: bool = False
    rescale: bool = True

    def __post_init__(self):
        self.algorithm = Algorithm.parse(self.algorithm)
        if not 0 < self.armijo_sigma < 1:
            raise ValueError("armijo_sigma must lie in (0, 1)")
        if not 0 < self.armijo_beta < 1:
            raise ValueError("armijo_beta must lie in (0, 1)")
        if not self.fo_beta > 1:
            raise ValueError("fo_beta must exceed 1")
        if self.damping_psi < 0:
            raise ValueError("damping_psi must be nonnegative")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")


class TracePoint(NamedTuple):
    sweep: int
    elapsed: float
    objective: float
    pgrad_norm: float


@dataclass
class SolverReport:
    final: FactorPair
    trace: list
    stop_reason: StopReason
    substitutions_used: int = 0
    initial_grad_norm: float = float("nan")

    @property
    def sweeps(self):
        return self.trace[-1].sweep

    @property
    def elapsed(self):
        return self.trace[-1].elapsed

    @property
    def objectives(self):
        return np.array([p.objective for p in self.trace])

    @property
    def pgrad_ratio(self):
        return self.trace[-1].pgrad_norm / self.initial_grad_norm


@dataclass
class SubstitutionBudget:
    remaining: int
    used: int = 0


# ----------------------------------------------------------------------------
# step-size searches


def armijo_search(F, x, grad, alpha, sigma=0.01, beta=0.1, fx=None,
                  decrease=None, max_expand=MAX_EXPAND):
    """One projected-gradient step with an Armijo step-size search.

    Starting from `alpha`, the step is shrunk by `beta` until
    ``F(y) - F(x) <= sigma <grad, y - x>`` holds for ``y = [x - alpha grad]_+``;
    if the initial step is already acceptable it is instead enlarged by
    ``1/beta`` while the condition keeps holding, and the last accepted
    point is returned.

    Parameters
    ----------
    F : callable
        Objective.
    x, grad : ndarray
        Current point and ``grad F(x)``.
    alpha : float
        Initial step, normally the step accepted at the previous call.
    decrease : callable, optional
        ``decrease(d)`` returning ``F(x + d) - F(x)`` without cancellation;
        used instead of `F` when given.

    Returns
    -------
    y : ndarray
    alpha : float
        The step that produced `y`.

    Raises
    ------
    LineSearchStall
        If the step shrinks below 1e-20 or the projected step is zero.
    """
    if decrease is None:
        f0 = F(x) if fx is None else fx

        def decrease(d):
            return F(x + d) - f0

    def trial(a):
        y = np.maximum(x - a * grad, 0.0)
        d = y - x
        return y, decrease(d) <= sigma * frobenius_inner(grad, d)

    y, ok = trial(alpha)
    if not ok:
        while not ok:
            alpha *= beta
            if alpha < ALPHA_FLOOR:
                raise LineSearchStall("Armijo step fell below floor")
            y, ok = trial(alpha)
    else:
        for _ in range(max_expand):
            y_next, ok = trial(alpha / beta)
            if not ok or np.array_equal(y_next, y):
                break
            y, alpha = y_next, alpha / beta
    if np.array_equal(y, x):
        raise LineSearchStall("zero projected step")
    return y, alpha


def fo_step(F, x, grad, L, beta=2.0, fx=None, decrease=None):
    """One projected step on the quadratic upper model with curvature `L`.

    `L` is multiplied by `beta` until
    ``F(y) - F(x) <= <grad, y - x> + L/2 ||y - x||^2`` for
    ``y = [x - grad / L]_+``; the returned estimate is relaxed to ``L / beta``.

    Raises
    ------
    LineSearchStall
        If `L` exceeds 1e300.
    """
    if decrease is None:
        f0 = F(x) if fx is None else fx

        def decrease(d):
            return F(x + d) - f0

    while True:
        y = np.maximum(x - grad / L, 0.0)
        d = y - x
        if decrease(d) <= frobenius_inner(grad, d) + 0.5 * L * frobenius_inner(d, d):
            return y, L / beta
        L *= beta
        if L > L_CEILING:
            raise LineSearchStall("Lipschitz estimate overflowed")


# ----------------------------------------------------------------------------
# sweeps


def mult_sweep(A, fp):
    """Multiplicative update of U, then of V using the new U."""
    U, V = fp.U, fp.V
    U = U * hadamard_div(A @ V, U @ (V.T @ V))
    V = V * hadamard_div(A.T @ U, V @ (U.T @ U))
    return FactorPair(U, V)


def als_sweep(A, fp):
    """Exact NNLS update of every row of V, then of every row of U."""
    U = fp.U
    G = U.T @ U
    B = U.T @ A
    V = np.array([nnls_gram(G, B[:, j]) for j in range(A.shape[1])]).reshape(-1, U.shape[1])
    G = V.T @ V
    B = V.T @ A.T
    U = np.array([nnls_gram(G, B[:, i]) for i in range(A.shape[0])]).reshape(-1, V.shape[1])
    return FactorPair(U, V)


def _plain_rule(t, rt, xx, y_old):
    """Closed-form column update ``[R^T x]_+ / ||x||^2`` (zero if undefined)."""
    yp = np.maximum(rt, 0.0)
    if xx > 0 and yp.any():
        return yp / xx
    return np.zeros_like(rt)


def column_update(R, u):
    """Best ``v >= 0`` for ``min 1/2 ||R - u v^T||^2``: ``[R^T u]_+ / ||u||^2``."""
    u = np.asarray(u, dtype=np.float64)
    return _plain_rule(None, np.asarray(R, dtype=np.float64).T @ u, float(u @ u), None)


def _damped_rule(psi):
    def rule(t, rt, xx, y_old):
        den = xx + psi
        if den <= 0:
            return np.zeros_like(rt)
        return np.maximum(rt + psi * y_old, 0.0) / den
    return rule


def residue_product(M, X, Y, t):
    """``R_t^T x_t`` without forming ``R_t = M - sum_{i != t} x_i y_i^T``."""
    x = X[:, t]
    xx = float(x @ x)
    return M.T @ x - Y @ (X.T @ x) + Y[:, t] * xx, xx


def _update_column(M, X, Y, t, rule):
    rt, xx = residue_product(M, X, Y, t)
    Y[:, t] = rule(t, rt, xx, Y[:, t])


def residue_sweep(A, fp, v_rule=_plain_rule, u_rule=_plain_rule, budget=None,
                  blocked=False):
    """Cyclic column updates shared by the RRI family.

    For each ``t``, ``v_t`` is updated against the residue, then ``u_t``.
    With ``blocked=True`` all ``v_t`` are updated before all ``u_t``.
    A column pair that ends up all-zero is re-seeded with
    :func:`rri_substitute_zero` while `budget` lasts.
    """
    A = np.asarray(A, dtype=np.float64)
    U = fp.U.copy(order="F")
    V = fp.V.copy(order="F")
    r = U.shape[1]
    if blocked:
        for t in range(r):
            _update_column(A, U, V, t, v_rule)
        for t in range(r):
            _update_column(A.T, V, U, t, u_rule)
        for t in range(r):
            _maybe_substitute(A, U, V, t, budget)
    else:
        for t in range(r):
            _update_column(A, U, V, t, v_rule)
            _update_column(A.T, V, U, t, u_rule)
            _maybe_substitute(A, U, V, t, budget)
    return FactorPair(U, V)


def _maybe_substitute(A, U, V, t, budget):
    if budget is None or budget.remaining <= 0:
        return
    if U[:, t].any() or V[:, t].any():
        return
    if _substitute_inplace(A, U, V, t):
        budget.remaining -= 1
        budget.used += 1


def _substitute_inplace(A, U, V, t):
    R = A - U @ V.T + np.outer(U[:, t], V[:, t])
    P = np.maximum(R, 0.0)
    scores = np.einsum("ij,ij->i", P, P)
    i = int(np.argmax(scores))
    if scores[i] <= 0:
        return False
    U[:, t] = 0.0
    U[i, t] = 1.0
    V[:, t] = P[i]
    return True


def rri_sweep(A, fp, budget=None, blocked=False):
    """One sweep of rank-one residue iteration.

    Each pair is refit by the exact minimizers
    ``v_t = [R_t^T u_t]_+ / ||u_t||^2`` and ``u_t = [R_t v_t]_+ / ||v_t||^2``.
    """
    return residue_sweep(A, fp, budget=budget, blocked=blocked)


def rri_substitute_zero(A, fp, t):
    """Replace the zero pair ``(u_t, v_t)`` by ``(e_i, [R_t^T e_i]_+)``.

    ``i`` maximizes ``||[R_t^T e_i]_+||``; the objective drops by that
    squared norm. A residue with no positive entry leaves `fp` unchanged.
    """
    if fp.U[:, t].any() or fp.V[:, t].any():
        raise ValueError(f"column pair {t} is not zero")
    U = fp.U.copy(order="F")
    V = fp.V.copy(order="F")
    _substitute_inplace(np.asarray(A, dtype=np.float64), U, V, t)
    return FactorPair(U, V)


def damped_rri_sweep(A, fp, psi, blocked=False):
    """RRI sweep with damping: ``v_t = [R_t^T u_t + psi v_t]_+ / (||u_t||^2 + psi)``."""
    if psi < 0:
        raise ValueError("psi must be nonnegative")
    rule = _damped_rule(psi)
    return residue_sweep(A, fp, v_rule=rule, u_rule=rule, blocked=blocked)


# ----------------------------------------------------------------------------
# gradient methods


class _Block:
    """Quadratic block problem ``min_{X >= 0} 1/2 <X, X H> - <X, C>``."""

    def __init__(self, H, C):
        self.H = H
        self.C = C

    def value(self, X):
        return 0.5 * frobenius_inner(X, X @ self.H) - frobenius_inner(X, self.C)

    def grad(self, X):
        return X @ self.H - self.C

    def decrease_from(self, G):
        H = self.H

        def decrease(D):
            return frobenius_inner(D, G) + 0.5 * frobenius_inner(D, D @ H)
        return decrease


class _Joint:
    """``1/2 ||A - U V^T||^2`` over the stacked vector ``(vec U, vec V)``."""

    def __init__(self, A, m, n, r):
        self.A = A
        self.m, self.n, self.r = m, n, r

    def split(self, x):
        k = self.m * self.r
        return (x[:k].reshape(self.m, self.r, order="F"),
                x[k:].reshape(self.n, self.r, order="F"))

    @staticmethod
    def stack(U, V):
        return np.concatenate([U.ravel(order="F"), V.ravel(order="F")])

    def value(self, x):
        U, V = self.split(x)
        return 0.5 * float(np.sum((self.A - U @ V.T) ** 2))

    def grad(self, x):
        U, V = self.split(x)
        R = U @ V.T - self.A
        return self.stack(R @ V, R.T @ U)

    def decrease_at(self, x):
        U, V = self.split(x)
        R = self.A - U @ V.T

        def decrease(d):
            dU, dV = self.split(d)
            D = dU @ (V + dV).T + U @ dV.T
            return -frobenius_inner(D, R) + 0.5 * frobenius_inner(D, D)
        return decrease


class _InnerState:
    def __init__(self, tol, step):
        self.tol = tol
        self.step = step   # alpha for Armijo, L for FO


def _inner_solve(block, X, state, cfg, use_fo):
    """Projected-gradient iterations on one block until its tolerance is met.

    Returns the new block and the number of steps taken; when no step was
    needed the block tolerance is tightened tenfold.
    """
    steps = 0
    for _ in range(MAX_INNER):
        G = block.grad(X)
        pg = np.linalg.norm(projected_gradient(X, G))
        if pg <= state.tol:
            break
        dec = block.decrease_from(G)
        if use_fo:
            X, state.step = fo_step(block.value, X, G, state.step,
                                    beta=cfg.fo_beta, decrease=dec)
        else:
            X, state.step = armijo_search(block.value, X, G, state.step,
                                          sigma=cfg.armijo_sigma,
                                          beta=cfg.armijo_beta, decrease=dec)
        steps += 1
    if steps == 0:
        state.tol /= 10.0
    return X, steps


def _make_stepper(A, cfg, initial_norm):
    alg = cfg.algorithm
    m, n = A.shape
    r = cfg.rank

    if alg is Algorithm.MULT:
        return lambda fp: mult_sweep(A, fp), None
    if alg is Algorithm.ALS:
        return lambda fp: als_sweep(A, fp), None
    if alg is Algorithm.RRI:
        budget = SubstitutionBudget(r if cfg.substitution_budget is None
                                    else cfg.substitution_budget)
        return (lambda fp: rri_sweep(A, fp, budget=budget, blocked=cfg.blocked_order),
                budget)
    if alg is Algorithm.DAMPED_RRI:
        return (lambda fp: damped_rri_sweep(A, fp, cfg.damping_psi,
                                            blocked=cfg.blocked_order), None)

    if alg in (Algorithm.FLINE, Algorithm.FFO):
        joint = _Joint(A, m, n, r)
        state = {"step": 1.0}

        def full_step(fp):
            x = joint.stack(fp.U, fp.V)
            g = joint.grad(x)
            dec = joint.decrease_at(x)
            if alg is Algorithm.FLINE:
                y, state["step"] = armijo_search(
                    joint.value, x, g, state["step"], sigma=cfg.armijo_sigma,
                    beta=cfg.armijo_beta, decrease=dec)
            else:
                y, state["step"] = fo_step(joint.value, x, g, state["step"],
                                           beta=cfg.fo_beta, decrease=dec)
            return FactorPair(*joint.split(y))
        return full_step, None

    use_fo = alg is Algorithm.CFO
    su = _InnerState(cfg.inner_eps_u * initial_norm, 1.0)
    sv = _InnerState(cfg.inner_eps_v * initial_norm, 1.0)

    def coord_step(fp):
        V = fp.V
        U, _ = _inner_solve(_Block(V.T @ V, A @ V), fp.U, su, cfg, use_fo)
        V, _ = _inner_solve(_Block(U.T @ U, A.T @ U), V, sv, cfg, use_fo)
        return FactorPair(U, V)
    return coord_step, None


def run(A, cfg, start=None):
    """Factorize a nonnegative matrix with the algorithm chosen in `cfg`.

    The start is ``start`` if given, else :func:`init_scaled` with
    ``cfg.seed``. After every sweep the column pairs are rebalanced, the
    objective and projected-gradient norm are appended to the trace, and
    the stop rule is checked against the gradient norm at the start.

    Returns
    -------
    SolverReport
    """
    A = as_matrix(A)
    if (A < 0).any():
        raise ValueError("input matrix has negative entries")
    fp = start.copy() if start is not None else init_scaled(A, cfg.rank, cfg.seed)
    if fp.rank != cfg.rank:
        raise ValueError(f"start has rank {fp.rank}, config asks for {cfg.rank}")

    kkt = gradients(A, fp)
    initial = gradient_norm(kkt)
    rule = replace(cfg.stop, initial_pgrad_norm=initial)
    step, budget = _make_stepper(A, cfg, initial)

    obj = objective(A, fp)
    pg = projected_gradient_norm(fp, kkt)
    trace = [TracePoint(0, 0.0, obj, pg)]
    t0 = time.perf_counter()
    reason = should_stop(rule, pg, 0.0, 0)
    sweeps = flat = 0
    while reason is None:
        try:
            fp = step(fp)
        except (LineSearchStall, NnlsDegeneracyError):
            reason = StopReason.STALLED
            break
        if cfg.rescale:
            fp = rescale_columns(fp)
        sweeps += 1
        kkt = gradients(A, fp)
        pg = projected_gradient_norm(fp, kkt)
        prev, obj = obj, objective(A, fp)
        elapsed = time.perf_counter() - t0
        trace.append(TracePoint(sweeps, elapsed, obj, pg))
        reason = should_stop(rule, pg, elapsed, sweeps)
        flat = flat + 1 if prev - obj < STALL_REL_DECREASE * prev else 0
        if reason is None and flat >= STALL_SWEEPS:
            reason = StopReason.STALLED

    return SolverReport(fp, trace, reason, budget.used if budget else 0, initial)
