"""Dense array helpers shared by the factorization routines.

Matrices are plain :class:`numpy.ndarray` objects of ``float64``. Factor
matrices are kept in Fortran (column-major) order because the rank-one
updates read and write whole columns.
"""

import numpy as np

#: Substituted for exactly-zero denominators in :func:`hadamard_div`.
EPS_DIV = 1e-12


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_matrix(a, copy=False):
    """Return `a` as a finite 2-D float64 array in column-major order."""
    a = np.array(a, dtype=np.float64, order="F", copy=True if copy else None,
                 ndmin=2)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got {a.ndim} dimensions")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def frobenius_inner(a, b):
    """Return ``sum_ij a_ij * b_ij``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def frobenius_norm_sq(a):
    return frobenius_inner(a, a)


def project_nonneg(x):
    """Elementwise ``max(x, 0)``; returns a new array."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def hadamard(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def hadamard_div(a, b):
    """Elementwise ``a / b`` with zero denominators replaced by `EPS_DIV`."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a / np.where(b == 0.0, EPS_DIV, b)
