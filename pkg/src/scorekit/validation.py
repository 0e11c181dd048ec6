"""Input validation helpers shared across the estimator and function APIs."""

import numpy as np

from .exceptions import DataError, DimMismatch, ZeroVector


def as_vector(x, name="x"):
    """Coerce to a 1-d finite float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if v.size == 0:
        raise DataError(f"{name} must not be empty")
    if not np.all(np.isfinite(v)):
        raise DataError(f"{name} contains non-finite values")
    return v


def as_matrix(x, name="x"):
    """Coerce to a 2-d finite float64 array."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError(f"{name} contains non-finite values")
    return m


def check_same_dim(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise DimMismatch(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}"
        )


def check_nonzero(v, name="vector"):
    if not np.any(v):
        raise ZeroVector(f"{name} has zero norm")


def check_same_length(a, b, what="inputs"):
    if len(a) != len(b):
        raise DataError(f"{what} have different lengths: {len(a)} vs {len(b)}")


def readonly(a):
    """Return ``a`` with the writeable flag cleared (shared-read safety)."""
    a.setflags(write=False)
    return a
