"""Small deterministic linear-algebra helpers shared across modules."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


def power_iteration_norm(A, tol: float = 1e-10, max_iter: int = 20000) -> float:
    """Operator norm by power iteration on A^T A with a deterministic start.

    The start vector has a small index-linear tilt so it is never orthogonal
    to the top singular space of the matrices that appear here.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DomainError("operator norm needs a matrix")
    n = A.shape[1]
    if n == 0 or A.shape[0] == 0:
        return 0.0
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam_new = float(v_new @ (A.T @ (A @ v_new)))
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-30):
            return math.sqrt(max(lam_new, 0.0))
        v, lam = v_new, lam_new
    return math.sqrt(max(lam, 0.0))
