"""
Rotation module.
This module builds the orthogonal matrix that aligns a weight vector with the
first axis by composing plane (Givens) rotations.
"""
import math
from dataclasses import dataclass

import numpy as np

from app.errors import InputError, KernelContractError

ORTHOGONALITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class RotationMatrix:
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float, copy=True)
        n = q.shape[0]
        deviation = np.max(np.abs(q.T @ q - np.eye(n)))
        if deviation >= ORTHOGONALITY_TOLERANCE:
            raise KernelContractError(f"rotation is not orthogonal (max deviation {deviation:.2e})")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]


def rotation_matrix(v) -> RotationMatrix:
    """
    Compose rotations in the planes (1, i), i = 2..n, so that Qv = (||v||, 0, ..., 0).

    Each step picks theta = -atan2([Qv]_i, [Qv]_1), which keeps the first coordinate
    non-negative, so Qv lands on +||v||.

    Args:
        v (array-like): Non-zero weight vector of length n >= 2

    Returns:
        RotationMatrix: Proper rotation (orthogonal, determinant +1)

    Raises:
        InputError: If v is zero, not finite or shorter than 2
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InputError(f"rotation needs a vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)) or not np.any(v != 0):
        raise InputError("rotation needs a finite, non-zero weight vector")

    n = v.size
    q = np.eye(n)
    w = v.copy()
    for i in range(1, n):
        theta = -math.atan2(w[i], w[0])
        c, s = math.cos(theta), math.sin(theta)
        # rows 0 and i of Q_i Q; only these two rows change
        first, other = q[0].copy(), q[i].copy()
        q[0] = c * first - s * other
        q[i] = s * first + c * other
        w0, wi = w[0], w[i]
        w[0] = c * w0 - s * wi
        w[i] = 0.0
    return RotationMatrix(q)
