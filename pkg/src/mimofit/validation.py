"""Input validation helpers shared across the package.

Small, sklearn-flavored checkers: each either returns a normalized ndarray
or raises ``ValueError`` with a message naming the offending input.
"""

from __future__ import annotations

import numpy as np

__all__ = ["check_finite", "as_points", "check_snapshot_matrix", "check_vector"]


def check_finite(arr, name: str) -> np.ndarray:
    """Raise ValueError if ``arr`` contains NaN or infinity."""
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def as_points(points, name: str) -> np.ndarray:
    """Normalize a list of 2D/3D points to a read-only (n, 3) float array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ValueError(f"{name} must be an (n, 2) or (n, 3) array of positions")
    if pts.shape[1] == 2:
        pts = np.hstack([pts, np.zeros((len(pts), 1))])
    check_finite(pts, name)
    pts = pts.copy()
    pts.flags.writeable = False
    return pts


def check_vector(vec, name: str, length: int | None = None) -> np.ndarray:
    """Validate a finite 1-D vector, optionally of fixed length."""
    vec = np.atleast_1d(np.asarray(vec))
    if vec.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if length is not None and len(vec) != length:
        raise ValueError(f"{name} must have length {length}, got {len(vec)}")
    check_finite(vec, name)
    return vec


def check_snapshot_matrix(X, n_paths: int | None = None,
                          n_snapshots: int | None = None) -> np.ndarray:
    """Validate a (K, MN) complex snapshot matrix and return it as complex128."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"snapshot matrix must be 2-D (K, MN), got shape {X.shape}")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X.real)) or not np.all(np.isfinite(X.imag)):
        raise ValueError("snapshot matrix must contain only finite values")
    if n_paths is not None and X.shape[1] != n_paths:
        raise ValueError(
            f"snapshot matrix has {X.shape[1]} paths per row, scene defines {n_paths}")
    if n_snapshots is not None and X.shape[0] != n_snapshots:
        raise ValueError(
            f"snapshot matrix has {X.shape[0]} rows, radar params define {n_snapshots}")
    return X
