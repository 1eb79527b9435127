"""Matrix exponential by scaling and squaring with diagonal Pade approximants.

Degree selection and scaling thresholds follow Higham's 2005 algorithm
(degrees 3, 5, 7, 9, 13).  Stacks of matrices of shape ``(N, n, n)`` are
handled in one pass with a common degree and scaling.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InputError

# max 1-norm for which the degree-m approximant meets unit roundoff
THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
         9: 2.097847961257068e0, 13: 5.371920351148152e0}


def _pade_coefficients(m: int) -> list[float]:
    return [
        math.factorial(2 * m - j) * math.factorial(m)
        / (math.factorial(2 * m) * math.factorial(j) * math.factorial(m - j))
        for j in range(m + 1)
    ]


PADE = {m: _pade_coefficients(m) for m in THETA}


def _pade(A: np.ndarray, m: int) -> np.ndarray:
    c = PADE[m]
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=A.dtype), A.shape)
    A2 = A @ A
    even = [eye, A2]
    for _ in range(2, m // 2 + 1):
        even.append(even[-1] @ A2)
    U_inner = sum(c[2 * k + 1] * even[k] for k in range(m // 2 + 1))
    V = sum(c[2 * k] * even[k] for k in range(m // 2 + 1))
    U = A @ U_inner
    return np.linalg.solve(V - U, V + U)


def expm(M, t: float = 1.0) -> np.ndarray:
    """Return ``exp(t M)`` for a square matrix or a stack of square matrices."""
    A = np.asarray(M, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InputError(f"expm needs square matrices, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("expm: entries must be finite")
    A = A * t
    norm1 = float(np.abs(A).sum(axis=-2).max()) if A.size else 0.0
    if norm1 == 0.0:
        return np.broadcast_to(np.eye(A.shape[-1], dtype=complex), A.shape).copy()
    for m in (3, 5, 7, 9):
        if norm1 <= THETA[m]:
            return _pade(A, m)
    s = max(0, math.ceil(math.log2(norm1 / THETA[13])))
    R = _pade(A / 2.0 ** s, 13)
    for _ in range(s):
        R = R @ R
    return R
