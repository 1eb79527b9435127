"""Eigenvalues of small dense complex matrices.

Householder reduction to upper Hessenberg form followed by the single-shift
complex QR algorithm (Wilkinson shifts, Givens rotations, deflation on small
subdiagonals).  Intended for the 2x2 .. 64x64 generators this package works
with; only eigenvalues are accumulated, never Schur vectors.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError, InputError
from .linalg import as_square

MAX_DIM = 64
ITERS_PER_EIGENVALUE = 30


def hessenberg(M) -> np.ndarray:
    """Unitarily similar upper Hessenberg form of ``M``."""
    H = as_square(M).copy()
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    l1, l2 = tr + disc, tr - disc
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2


def _qr_sweep(W: np.ndarray, mu: complex) -> None:
    """One shifted QR step ``W - mu = QR, W <- RQ + mu`` in place (W Hessenberg)."""
    m = W.shape[0]
    idx = np.arange(m)
    W[idx, idx] -= mu
    rots = []
    for k in range(m - 1):
        a, b = W[k, k], W[k + 1, k]
        r = np.hypot(abs(a), abs(b))
        if r == 0.0:
            c, s = 1.0 + 0j, 0.0 + 0j
        else:
            c, s = a / r, b / r
        # G = [[conj(c), conj(s)], [-s, c]] is unitary and maps (a, b) to (r, 0)
        rk = W[k, k:].copy()
        rk1 = W[k + 1, k:].copy()
        W[k, k:] = np.conj(c) * rk + np.conj(s) * rk1
        W[k + 1, k:] = -s * rk + c * rk1
        W[k + 1, k] = 0.0
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        top = min(k + 2, m - 1)
        ck = W[: top + 1, k].copy()
        ck1 = W[: top + 1, k + 1].copy()
        # right-multiply by G^H
        W[: top + 1, k] = c * ck + s * ck1
        W[: top + 1, k + 1] = -np.conj(s) * ck + np.conj(c) * ck1
    W[idx, idx] += mu


def eigenvalues(M, max_dim: int = MAX_DIM) -> np.ndarray:
    """All eigenvalues of ``M`` with multiplicity, in no particular order.

    Raises :class:`ConvergenceError` if the QR iteration does not deflate an
    eigenvalue within ``30`` iterations.
    """
    A = as_square(M)
    n = A.shape[0]
    if n > max_dim:
        raise InputError(f"dimension {n} exceeds the eigenvalue cap {max_dim}")
    if n == 1:
        return A[0, :1].copy()
    H = hessenberg(A)
    eps = np.finfo(float).eps
    norm_h = np.abs(H).sum(axis=0).max()
    out = np.empty(n, dtype=complex)
    hi = n - 1
    iters = 0
    while hi >= 0:
        if hi == 0:
            out[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            small = eps * (abs(H[lo - 1, lo - 1]) + abs(H[lo, lo]))
            if abs(H[lo, lo - 1]) <= max(small, eps * eps * norm_h):
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            out[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        iters += 1
        if iters > ITERS_PER_EIGENVALUE:
            raise ConvergenceError(
                f"QR iteration did not converge for eigenvalue {hi} after {ITERS_PER_EIGENVALUE} steps"
            )
        if iters % 10 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson_shift(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        W = H[lo:hi + 1, lo:hi + 1]
        _qr_sweep(W, mu)
        H[lo:hi + 1, lo:hi + 1] = W
    return out


def spectral_abscissa(M) -> float:
    return float(np.max(eigenvalues(M).real))
