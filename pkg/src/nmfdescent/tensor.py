"""Nonnegative Kruskal approximation of d-way tensors by rank-one residue updates.

Tensors are plain ``numpy`` arrays. A Kruskal tensor is
``S = sum_i sigma_i u_1i * u_2i * ... * u_di`` (outer products) with
unit-norm nonnegative factors.
"""

from dataclasses import dataclass

import numpy as np

from .solvers import SubstitutionBudget


def as_tensor(T):
    T = np.asarray(T, dtype=np.float64)
    if T.ndim < 2:
        raise ValueError("tensor needs at least two modes")
    if not np.isfinite(T).all():
        raise ValueError("tensor has non-finite entries")
    return T


@dataclass
class KruskalTensor:
    scales: np.ndarray
    factors: list  # one (n_t, r) array per mode

    def __post_init__(self):
        self.scales = np.asarray(self.scales, dtype=np.float64).ravel()
        self.factors = [np.array(F, dtype=np.float64, order="F", ndmin=2) for F in self.factors]
        r = self.scales.size
        if any(F.shape[1] != r for F in self.factors):
            raise ValueError("factor matrices disagree on the rank")

    @property
    def rank(self):
        return self.scales.size

    @property
    def shape(self):
        return tuple(F.shape[0] for F in self.factors)

    def copy(self):
        return KruskalTensor(self.scales.copy(), [F.copy() for F in self.factors])


def kruskal_to_dense(S):
    """Materialize ``sum_i sigma_i u_1i * ... * u_di``."""
    out = np.zeros(S.shape)
    for i in range(S.rank):
        term = np.array(S.scales[i])
        for F in S.factors:
            term = np.multiply.outer(term, F[:, i])
        out += term
    return out


def contract_except(T, vectors, t):
    """Contract every mode of `T` but `t` with the matching entry of `vectors`.

    ``vectors[t]`` is ignored. Modes are contracted in increasing order,
    leaving a vector of length ``T.shape[t]``.
    """
    T = np.asarray(T, dtype=np.float64)
    if len(vectors) != T.ndim or not 0 <= t < T.ndim:
        raise ValueError("need one vector per mode and a valid mode index")
    for s, v in enumerate(vectors):
        if s != t and np.shape(v) != (T.shape[s],):
            raise ValueError(f"vector for mode {s} has length {np.shape(v)}, "
                             f"expected {T.shape[s]}")
    y = T
    for s in range(T.ndim):
        if s == t:
            continue
        axis = 0 if s < t else 1
        y = np.tensordot(y, vectors[s], axes=([axis], [0]))
    return y


def tensor_error(T, S):
    """``1/2 ||T - S||_F^2``."""
    D = T - kruskal_to_dense(S)
    return 0.5 * float(np.sum(D * D))


def _term_update(T, S, k, t):
    d = len(S.factors)
    y = contract_except(T, [F[:, k] for F in S.factors], t)
    # subtract the other terms' contributions without forming the residue
    w = S.scales.copy()
    for s in range(d):
        if s != t:
            w *= S.factors[s].T @ S.factors[s][:, k]
    w[k] = 0.0
    y = y - S.factors[t] @ w
    yp = np.maximum(y, 0.0)
    sigma = float(np.linalg.norm(yp))
    if sigma > 0:
        S.factors[t][:, k] = yp / sigma
        S.scales[k] = sigma
    else:
        S.scales[k] = 0.0


def _substitute_term(T, S, k):
    """Seed a vanished term at the mode-0 slice of its residue with most positive mass.

    The other factors start at the normalized marginals of that slice's
    positive part and are then refit in mode order.
    """
    others = S.copy()
    others.scales[k] = 0.0
    P = np.maximum(T - kruskal_to_dense(others), 0.0)
    mass = np.sum(P * P, axis=tuple(range(1, T.ndim)))
    i = int(np.argmax(mass))
    if mass[i] <= 0:
        return False
    S.factors[0][:, k] = 0.0
    S.factors[0][i, k] = 1.0
    slab = P[i]
    for t in range(1, T.ndim):
        marg = slab.sum(axis=tuple(s for s in range(slab.ndim) if s != t - 1))
        S.factors[t][:, k] = marg / np.linalg.norm(marg)
    for t in range(1, T.ndim):
        _term_update(T, S, k, t)
    return True


def tensor_rri_sweep(T, S, budget=None):
    """One sweep: for each term ``k``, refit ``(sigma_k, u_tk)`` for modes ``t = 0..d-1``.

    Each step is the exact minimizer of ``||T - S||`` over the pair, given
    the other factors: ``sigma_k = ||y_+||`` and ``u_tk = y_+ / sigma_k``
    where ``y`` is the residue contracted with the other modes. If ``y_+``
    vanishes, ``sigma_k`` becomes 0 and ``u_tk`` is kept. A term that ends
    the cycle at zero is re-seeded while `budget` lasts.
    """
    T = as_tensor(T)
    if T.shape != S.shape:
        raise ValueError(f"tensor shape {T.shape} differs from model {S.shape}")
    S = S.copy()
    for k in range(S.rank):
        for t in range(T.ndim):
            _term_update(T, S, k, t)
        if (S.scales[k] == 0 and budget is not None and budget.remaining > 0
                and _substitute_term(T, S, k)):
            budget.remaining -= 1
            budget.used += 1
    return S


def init_kruskal(shape, r, seed=0):
    """Random unit nonnegative factors with zero scales."""
    rng = np.random.default_rng(seed)
    factors = []
    for n in shape:
        F = rng.random((n, r))
        factors.append(F / np.linalg.norm(F, axis=0))
    return KruskalTensor(np.zeros(r), factors)


def run_tensor_rri(T, r, sweeps=100, seed=0, tol=0.0, start=None):
    """Fit a rank-r nonnegative Kruskal tensor; return ``(S, error trace)``.

    The trace holds ``1/2 ||T - S||^2`` after every sweep. Stops early when
    the relative decrease over a sweep is at most `tol`.
    """
    T = as_tensor(T)
    if (T < 0).any():
        raise ValueError("tensor has negative entries")
    S = start.copy() if start is not None else init_kruskal(T.shape, r, seed)
    budget = SubstitutionBudget(r)
    trace = [tensor_error(T, S)]
    for _ in range(sweeps):
        S = tensor_rri_sweep(T, S, budget)
        trace.append(tensor_error(T, S))
        if trace[-1] == 0 or trace[-2] - trace[-1] <= tol * trace[-2]:
            break
    return S, trace
