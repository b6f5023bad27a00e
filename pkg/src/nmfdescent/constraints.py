"""Normed constraint sets and the generalized rank-one residue iteration.

GRRI fits ``A ~ X diag(d) Y^T`` where every column of ``X`` and ``Y`` lies
in a set of unit-norm vectors. Each column update reduces to

    s* = argmax_{s in S} <y, s>,

which has a cheap exact answer for each set below.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix


class SetKind(enum.Enum):
    NORMED = "normed"
    NORMED_NONNEG = "nonneg"
    BOUNDED_NONNEG = "bounded"
    BINARY = "binary"
    SPARSE_K = "sparsek"
    HOYER_SPARSE = "hoyer"


@dataclass(frozen=True)
class ConstraintSet:
    """One of the normed sets understood by :func:`max_inner`.

    Build instances with the classmethods, e.g. ``ConstraintSet.sparse(3)``.
    """

    kind: SetKind
    lower: np.ndarray | None = field(default=None, compare=False)
    upper: np.ndarray | None = field(default=None, compare=False)
    k: int | None = None
    target: float | None = None

    @classmethod
    def normed(cls):
        return cls(SetKind.NORMED)

    @classmethod
    def nonneg(cls):
        return cls(SetKind.NORMED_NONNEG)

    @classmethod
    def bounded(cls, lower, upper):
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if lower.shape != upper.shape:
            raise ValueError("bounds differ in length")
        if (lower < 0).any() or (lower > upper).any():
            raise ValueError("need 0 <= lower <= upper")
        if np.linalg.norm(lower) > 1 or np.linalg.norm(upper) < 1:
            raise ValueError("bounds admit no unit vector")
        return cls(SetKind.BOUNDED_NONNEG, lower=lower, upper=upper)

    @classmethod
    def binary(cls):
        return cls(SetKind.BINARY)

    @classmethod
    def sparse(cls, k):
        if k < 1:
            raise ValueError("K must be at least 1")
        return cls(SetKind.SPARSE_K, k=int(k))

    @classmethod
    def hoyer(cls, target):
        if not 0 < target < 1:
            raise ValueError("Hoyer sparsity target must lie in (0, 1)")
        return cls(SetKind.HOYER_SPARSE, target=float(target))

    @classmethod
    def parse(cls, text):
        """Parse ``normed``, ``nonneg``, ``binary``, ``sparsek:K`` or ``hoyer:S``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "normed":
            return cls.normed()
        if name == "nonneg":
            return cls.nonneg()
        if name == "binary":
            return cls.binary()
        if name == "sparsek" and arg:
            return cls.sparse(int(arg))
        if name == "hoyer" and arg:
            return cls.hoyer(float(arg))
        raise ValueError(f"cannot parse constraint {text!r}")


def hoyer_sparsity(s):
    """``(sqrt(n) - ||s||_1 / ||s||_2) / (sqrt(n) - 1)``; 0 for flat, 1 for a spike."""
    s = np.asarray(s, dtype=np.float64)
    n = s.size
    return (np.sqrt(n) - np.abs(s).sum() / np.linalg.norm(s)) / (np.sqrt(n) - 1)


def hoyer_project(x, l1, l2=1.0, max_iter=100):
    """Closest nonnegative vector to `x` with the given L1 and L2 norms.

    Alternates between the hyperplane ``sum(s) = l1`` and the sphere
    ``||s|| = l2``, zeroing negative entries and removing them from further
    consideration.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    s = x + (l1 - x.sum()) / n
    zero = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        free = ~zero
        mid = np.where(free, l1 / free.sum(), 0.0)
        w = s - mid
        # alpha >= 0 with ||mid + alpha w||^2 = l2^2
        a = w @ w
        b = 2.0 * (w @ mid)
        c = mid @ mid - l2**2
        alpha = (-b + np.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a) if a > 0 else 0.0
        s = mid + alpha * w
        if (s >= 0).all():
            return s
        zero |= s < 0
        s[zero] = 0.0
        free = ~zero
        s[free] -= (s.sum() - l1) / free.sum()
    return np.maximum(s, 0.0)


def _hoyer_max_inner(y, target):
    n = y.size
    if n == 1:
        return np.ones(1)
    l1 = np.sqrt(n) - target * (np.sqrt(n) - 1)
    s = hoyer_project(y, l1, 1.0)
    return s / np.linalg.norm(s)


def _unit(v):
    nv = np.linalg.norm(v)
    return v / nv if nv > 0 else np.zeros_like(v)


def max_inner(cset, y):
    """Return the maximizer of ``<y, s>`` over unit vectors ``s`` in `cset`.

    An all-zero vector is returned when the set has no maximizer for `y`,
    e.g. the nonnegative sets when ``y <= 0``.

    The bounded set returns ``max(l, min(u, y+ / ||y+||))`` as is, which is
    not always of unit norm; GRRI refits ``d`` to absorb the scale.
    """
    y = np.asarray(y, dtype=np.float64)
    kind = cset.kind
    if kind is SetKind.NORMED:
        return _unit(y)
    if kind is SetKind.NORMED_NONNEG:
        return _unit(np.maximum(y, 0.0))
    if kind is SetKind.BOUNDED_NONNEG:
        return np.maximum(cset.lower, np.minimum(cset.upper, _unit(np.maximum(y, 0.0))))
    if kind is SetKind.BINARY:
        order = np.argsort(-y, kind="stable")
        score = np.cumsum(y[order]) / np.sqrt(np.arange(1, y.size + 1))
        k = int(np.argmax(score)) + 1
        s = np.zeros_like(y)
        s[order[:k]] = 1.0 / np.sqrt(k)
        return s
    if kind is SetKind.SPARSE_K:
        order = np.argsort(-y, kind="stable")
        keep = min(int((y > 0).sum()), cset.k)
        s = np.zeros_like(y)
        s[order[:keep]] = y[order[:keep]]
        return _unit(s)
    if kind is SetKind.HOYER_SPARSE:
        return _hoyer_max_inner(y, cset.target)
    raise ValueError(f"unknown set kind {kind}")


@dataclass
class DiagonalFactorization:
    """``A ~ X diag(d) Y^T`` with unit (or zero) columns in X and Y."""

    X: np.ndarray
    Y: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.X = as_matrix(self.X)
        self.Y = as_matrix(self.Y)
        self.d = np.asarray(self.d, dtype=np.float64).ravel()
        if not self.X.shape[1] == self.Y.shape[1] == self.d.size:
            raise ValueError("X, Y and d disagree on the rank")

    def copy(self):
        return DiagonalFactorization(self.X.copy(), self.Y.copy(), self.d.copy())

    def product(self):
        return (self.X * self.d) @ self.Y.T

    @classmethod
    def from_factors(cls, U, V):
        """Split ``U V^T`` into unit columns and scales."""
        nu = np.linalg.norm(U, axis=0)
        nv = np.linalg.norm(V, axis=0)
        X = np.divide(U, nu, out=np.zeros_like(U, dtype=float), where=nu > 0)
        Y = np.divide(V, nv, out=np.zeros_like(V, dtype=float), where=nv > 0)
        return cls(X, Y, nu * nv)


def grri_objective(A, f):
    R = np.asarray(A, dtype=np.float64) - f.product()
    return 0.5 * float(np.sum(R * R))


def _column_gain(rt, d, other_sq, s):
    """``1/2 ||R - d x s^T||^2 - 1/2 ||R||^2`` given ``rt = R^T x``, ``other_sq = ||x||^2``."""
    return -d * (rt @ s) + 0.5 * d * d * other_sq * (s @ s)


def grri_sweep(A, f, set_x, set_y):
    """One sweep of the generalized rank-one residue iteration.

    For each ``i``: ``y_i`` maximizes ``<R_i^T x_i, s>`` over `set_y`,
    ``x_i`` maximizes ``<R_i y_i, s>`` over `set_x`, then ``d_i`` is refit
    by least squares and clamped at 0. A candidate column that would raise
    the error (possible only for sets whose maximizer is not unit norm) is
    rejected and the previous column kept.
    """
    A = np.asarray(A, dtype=np.float64)
    X, Y, d = f.X.copy(order="F"), f.Y.copy(order="F"), f.d.copy()
    for i in range(d.size):
        xi = X[:, i]
        xx = xi @ xi
        # R_i^T x_i with R_i = A - sum_{j != i} d_j x_j y_j^T
        rtx = A.T @ xi - Y @ (d * (X.T @ xi)) + Y[:, i] * (d[i] * xx)
        cand = max_inner(set_y, rtx)
        if d[i] * xx == 0 or (_column_gain(rtx, d[i], xx, cand)
                              <= _column_gain(rtx, d[i], xx, Y[:, i])):
            Y[:, i] = cand
        yi = Y[:, i]
        yy = yi @ yi
        ry = A @ yi - X @ (d * (Y.T @ yi)) + X[:, i] * (d[i] * yy)
        cand = max_inner(set_x, ry)
        if d[i] * yy == 0 or (_column_gain(ry, d[i], yy, cand)
                              <= _column_gain(ry, d[i], yy, xi)):
            X[:, i] = cand
        xi = X[:, i]
        den = (xi @ xi) * yy
        d[i] = max((xi @ ry) / den, 0.0) if den > 0 else 0.0
    return DiagonalFactorization(X, Y, d)


def init_diagonal(A, r, seed, set_x=None, set_y=None):
    """Random nonnegative start mapped into the sets, with least-squares scales."""
    A = np.asarray(A, dtype=np.float64)
    rng = np.random.default_rng(seed)
    m, n = A.shape
    X = rng.random((m, r))
    Y = rng.random((n, r))
    if set_x is not None:
        X = np.column_stack([max_inner(set_x, X[:, i]) for i in range(r)])
    if set_y is not None:
        Y = np.column_stack([max_inner(set_y, Y[:, i]) for i in range(r)])
    f = DiagonalFactorization.from_factors(X, Y)
    f.d = np.zeros(r)
    return f


def run_grri(A, r, set_x, set_y, sweeps=100, seed=0, tol=0.0, start=None):
    """Run :func:`grri_sweep` and return ``(factorization, objective trace)``.

    Stops after `sweeps` sweeps, or earlier once the relative decrease of the
    objective over one sweep drops below `tol`.
    """
    f = start.copy() if start is not None else init_diagonal(A, r, seed, set_x, set_y)
    trace = [grri_objective(A, f)]
    for _ in range(sweeps):
        f = grri_sweep(A, f, set_x, set_y)
        trace.append(grri_objective(A, f))
        if trace[-2] > 0 and trace[-2] - trace[-1] <= tol * trace[-2]:
            break
    return f, trace
