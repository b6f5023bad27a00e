"""Active-set nonnegative least squares (Lawson and Hanson)."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg


@dataclass
class NnlsProblem:
    """``min_{v >= 0} 1/2 ||target - design v||^2``."""

    design: np.ndarray
    target: np.ndarray


class NnlsDegeneracyError(RuntimeError):
    """The active-set loop hit its iteration cap; ``best`` is the last iterate."""

    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


def _solve_passive(G, b, passive):
    """Unconstrained minimizer restricted to the passive coordinates."""
    z = np.zeros_like(b)
    idx = np.flatnonzero(passive)
    if idx.size == 0:
        return z
    Gp = G[np.ix_(idx, idx)]
    try:
        c = linalg.cho_factor(Gp, check_finite=False)
        z[idx] = linalg.cho_solve(c, b[idx], check_finite=False)
    except linalg.LinAlgError:
        # rank-deficient passive block
        z[idx] = np.linalg.lstsq(Gp, b[idx], rcond=None)[0]
    return z


def nnls_gram(G, b, max_iter=None, tol=None):
    """Solve ``min_{x >= 0} 1/2 x^T G x - b^T x`` for a PSD Gram matrix `G`.

    This is the normal-equation form of NNLS, with ``G = U^T U`` and
    ``b = U^T a``. Passing `G` lets callers share it across many right-hand
    sides.

    Parameters
    ----------
    G : (r, r) ndarray
    b : (r,) ndarray
    max_iter : int, optional
        Cap on the number of variables entering the passive set.
        Defaults to ``3 * r``.
    tol : float, optional
        Dual feasibility tolerance. Defaults to ``1e-12 * max(1, ||b||_inf)``.

    Returns
    -------
    x : (r,) ndarray
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    r = b.shape[0]
    if max_iter is None:
        max_iter = 3 * r
    if tol is None:
        tol = 1e-12 * max(1.0, np.abs(b).max(initial=0.0))

    x = np.zeros(r)
    passive = np.zeros(r, dtype=bool)
    w = b.copy()
    n_enter = 0
    while True:
        cand = np.where(passive, -np.inf, w)
        if r == 0 or cand.max() <= tol:
            return x
        if n_enter >= max_iter:
            raise NnlsDegeneracyError(
                f"active set did not settle after {max_iter} swaps", x)
        # argmax returns the smallest index among ties
        passive[int(np.argmax(cand))] = True
        n_enter += 1

        z = _solve_passive(G, b, passive)
        while (z[passive] <= 0).any():
            bad = np.flatnonzero(passive & (z <= 0))
            ratios = x[bad] / (x[bad] - z[bad])
            alpha = ratios.min()
            x = x + alpha * (z - x)
            passive[bad[ratios <= alpha]] = False
            passive &= x > 0
            x[~passive] = 0.0
            z = _solve_passive(G, b, passive)
        x = z
        w = b - G @ x


def solve_nnls(p):
    """Solve an :class:`NnlsProblem` with the active-set method."""
    U = np.asarray(p.design, dtype=np.float64)
    a = np.asarray(p.target, dtype=np.float64)
    if U.ndim != 2 or a.ndim != 1 or U.shape[0] != a.shape[0]:
        raise ValueError(f"incompatible shapes {U.shape} and {a.shape}")
    return nnls_gram(U.T @ U, U.T @ a)
