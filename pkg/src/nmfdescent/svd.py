"""Unconstrained low-rank baselines built on a one-sided Jacobi SVD.

The truncated SVD ``A_r`` is the best rank-r approximation of ``A``; its
nonnegative part ``[A_r]_+`` is never farther from a nonnegative ``A``, and
both bound what any NMF of rank r can reach from below.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix


class SvdConvergenceError(np.linalg.LinAlgError):
    pass


@dataclass
class SvdResult:
    left: np.ndarray       # P, m x m orthogonal
    singulars: np.ndarray  # min(m, n) values, nonincreasing
    right: np.ndarray      # Q, n x n orthogonal

    def diag(self):
        m, n = self.left.shape[0], self.right.shape[0]
        S = np.zeros((m, n))
        k = self.singulars.size
        S[:k, :k] = np.diag(self.singulars)
        return S


def _round_robin(n):
    """Pairings of ``0..n-1`` such that each round holds disjoint pairs."""
    players = list(range(n + (n % 2)))
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = [(min(p), max(p)) for p in pairs if max(p) < n]
        if pairs:
            p, q = np.array(pairs).T
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _complete_basis(P):
    """Extend orthonormal columns `P` (m x k) to an m x m orthogonal matrix."""
    m, k = P.shape
    if k == m:
        return P
    Q, _ = np.linalg.qr(np.hstack([P, np.eye(m)]))
    Q = Q[:, :m].copy()
    Q[:, :k] = P
    return Q


def _jacobi(W, max_sweeps):
    """Orthogonalize the columns of `W` in place; return the rotation matrix."""
    m, n = W.shape
    Q = np.eye(n)
    tol = max(1e-15, m * np.finfo(float).eps)
    floor = (1e-14 * np.linalg.norm(W)) ** 2
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            Wp, Wq = W[:, p], W[:, q]
            a = np.einsum("ij,ij->j", Wp, Wp)
            b = np.einsum("ij,ij->j", Wq, Wq)
            g = np.einsum("ij,ij->j", Wp, Wq)
            need = (np.abs(g) > tol * np.sqrt(a * b)) & (a * b > floor * floor)
            if not need.any():
                continue
            rotated = True
            p, q, a, b, g = p[need], q[need], a[need], b[need], g[need]
            zeta = (b - a) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta**2))
            c = 1.0 / np.sqrt(1.0 + t**2)
            s = c * t
            for M in (W, Q):
                Mp, Mq = M[:, p].copy(), M[:, q]
                M[:, p] = c * Mp - s * Mq
                M[:, q] = s * Mp + c * Mq
        if not rotated:
            return Q
    raise SvdConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def svd(A, max_sweeps=60):
    """Full SVD ``A = P diag(sigma) Q^T`` by one-sided Jacobi rotations.

    Parameters
    ----------
    A : (m, n) array_like
    max_sweeps : int
        Iteration cap; :class:`SvdConvergenceError` is raised beyond it.

    Returns
    -------
    SvdResult
        ``P`` (m x m) and ``Q`` (n x n) orthogonal, singular values sorted
        in nonincreasing order.
    """
    A = as_matrix(A, copy=True)
    transposed = A.shape[0] < A.shape[1]
    W = np.array(A.T if transposed else A, order="F")
    m, n = W.shape
    Q = _jacobi(W, max_sweeps)

    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, W, Q = sigma[order], W[:, order], Q[:, order]

    big = sigma > max(n, m) * np.finfo(float).eps * (sigma[0] if n else 0.0)
    k = int(big.sum())
    P = _complete_basis(W[:, :k] / sigma[:k])
    sigma = np.where(big, sigma, 0.0)
    if transposed:
        return SvdResult(Q, sigma, P)
    return SvdResult(P, sigma, Q)


def truncate(s, r):
    """Rank-r truncation ``P_r diag(sigma_r) Q_r^T``."""
    if not 1 <= r <= s.singulars.size:
        raise ValueError(f"rank {r} outside 1..{s.singulars.size}")
    return (s.left[:, :r] * s.singulars[:r]) @ s.right[:, :r].T


def truncation_error(s, r):
    """``1/2 sum_{i > r} sigma_i^2``, the error of :func:`truncate`."""
    return 0.5 * float(np.sum(s.singulars[r:] ** 2))


def nonneg_part_baseline(A, r):
    """Return ``([A_r]_+, ||A - [A_r]_+||_F)``."""
    A = as_matrix(A)
    Ap = np.maximum(truncate(svd(A), r), 0.0)
    return Ap, float(np.linalg.norm(A - Ap))


def rank_one_global(A):
    """Best rank-one nonnegative approximation ``u v^T`` of a nonnegative matrix.

    The dominant singular pair, flipped into the nonnegative orthant and
    scaled by ``sqrt(sigma_1)`` each, so ``||A - u v^T||^2 = sum_{i>=2} sigma_i^2``.
    """
    A = as_matrix(A)
    if (A < 0).any():
        raise ValueError("matrix must be nonnegative")
    s = svd(A)
    u, v = s.left[:, 0].copy(), s.right[:, 0].copy()
    if u[np.argmax(np.abs(u))] < 0:
        u, v = -u, -v
    root = np.sqrt(s.singulars[0])
    return np.maximum(u, 0.0) * root, np.maximum(v, 0.0) * root


@dataclass
class SaddleWitness:
    """Outcome of :func:`saddle_probe`.

    ``err_*`` are Frobenius norms ``||A - X||`` for the stationary point,
    the perturbed point that increases the error and, if one was found, the
    one that decreases it.
    """

    eps: float
    err_stationary: float
    err_upper: float
    err_lower: float | None
    kept: tuple
    swapped: tuple | None

    @property
    def decrease_found(self):
        return self.err_lower is not None and self.err_lower < self.err_stationary

    @property
    def is_saddle(self):
        return self.decrease_found and self.err_upper > self.err_stationary


def saddle_probe(A, r, kept=None, eps=None):
    """Show that a non-dominant stationary point of rank-r approximation is a saddle.

    The stationary point keeps the singular triplets listed in `kept`
    (indices into the sorted singular values). Two rank-r points at
    distance O(eps) are built: one enlarges the first kept singular value
    (error goes up), the other rotates a kept triplet toward a larger
    left-out one (error goes down).

    Parameters
    ----------
    A : (m, n) array_like
    r : int
    kept : sequence of int, optional
        Defaults to the dominant choice ``0..r-1``, for which no decrease
        direction exists.
    eps : float, optional
        Defaults to ``min(0.1, sqrt(2 (sigma_l - sigma_k)) / 2)``.
    """
    A = as_matrix(A)
    s = svd(A)
    sig = s.singulars
    kept = tuple(range(r)) if kept is None else tuple(int(i) for i in kept)
    if len(kept) != r or len(set(kept)) != r or not all(0 <= i < sig.size for i in kept):
        raise ValueError(f"need {r} distinct singular indices, got {kept}")

    P, Q = s.left, s.right
    S = np.zeros_like(A)

    def place(M, i, j, val):
        return M + val * np.outer(P[:, i], Q[:, j])

    for i in kept:
        S = place(S, i, i, sig[i])
    err_stat = float(np.linalg.norm(A - S))

    # the kept triplet with smallest value against the largest left-out one
    left_out = [i for i in range(sig.size) if i not in kept]
    k = min(kept, key=lambda i: sig[i])
    l = max(left_out, key=lambda i: sig[i]) if left_out else None
    has_pair = l is not None and sig[l] > sig[k]

    if eps is None:
        eps = min(0.1, 0.5 * np.sqrt(2.0 * (sig[l] - sig[k]))) if has_pair else 0.1
    upper = place(S, kept[0], kept[0], eps)
    err_upper = float(np.linalg.norm(A - upper))

    if not has_pair:
        return SaddleWitness(eps, err_stat, err_upper, None, kept, None)
    c = eps * np.sqrt(sig[k])
    lower = place(place(place(S, k, l, c), l, k, c), l, l, eps**2)
    err_lower = float(np.linalg.norm(A - lower))
    return SaddleWitness(eps, err_stat, err_upper, err_lower, kept, (k, l))
