"""Internal versus external stability of finite-dimensional systems.

At finite dimension a system is exponentially stable exactly when it is
stabilizable, detectable and its input-output operator is bounded.  The
checks here evaluate each ingredient independently so that the equivalence
can be tested on concrete instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numcore import Quadrature, batch_induced_norm, eigenvalues, expm, integrate_decaying
from .transfer import LtiSystem

RANK_RTOL = 1e-10
CLUSTER_RTOL = 1e-6


def _scale(*mats) -> float:
    return max([float(np.linalg.norm(M, 2)) for M in mats if M.size] + [np.finfo(float).tiny])


def _closed_rhp_eigenvalues(A: np.ndarray) -> list:
    """Eigenvalues with ``Re >= 0``, nearby values merged (defective blocks split under roundoff)."""
    ev = eigenvalues(A)
    tol = CLUSTER_RTOL * max(1.0, _scale(A))
    bad = [lam for lam in ev if lam.real >= -tol]
    clusters = []
    for lam in bad:
        for c in clusters:
            if abs(lam - np.mean(c)) <= tol:
                c.append(lam)
                break
        else:
            clusters.append([lam])
    return [complex(np.mean(c)) for c in clusters]


def _full_rank(M: np.ndarray, n: int, scale: float) -> bool:
    sv = np.linalg.svd(M, compute_uv=False)
    return len(sv) >= n and bool(sv[n - 1] > RANK_RTOL * scale)


def hautus_stabilizable(sys: LtiSystem) -> bool:
    """``rank [A - lam I | B] = n`` at every eigenvalue with ``Re lam >= 0``."""
    A, B, n = sys.A, sys.B, sys.n
    scale = _scale(A, B)
    eye = np.eye(n)
    return all(_full_rank(np.hstack([A - lam * eye, B]), n, scale) for lam in _closed_rhp_eigenvalues(A))


def hautus_detectable(sys: LtiSystem) -> bool:
    """``rank [A - lam I ; C] = n`` at every eigenvalue with ``Re lam >= 0``."""
    A, C, n = sys.A, sys.C, sys.n
    scale = _scale(A, C)
    eye = np.eye(n)
    return all(_full_rank(np.vstack([A - lam * eye, C]), n, scale) for lam in _closed_rhp_eigenvalues(A))


def _reachable_basis(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the smallest A-invariant subspace containing range(B)."""
    n = A.shape[0]
    tol = RANK_RTOL * _scale(A, B)

    def orth(M):
        if M.shape[1] == 0:
            return M
        U, sv, _ = np.linalg.svd(M, full_matrices=False)
        return U[:, sv > tol]

    V = orth(B)
    while 0 < V.shape[1] < n:
        W = orth(np.hstack([V, A @ V]))
        if W.shape[1] == V.shape[1]:
            break
        V = W
    return V


def minimal_realization(sys: LtiSystem):
    """``(A_m, B_m, C_m)``: the reachable and observable part (orthogonal staircase)."""
    V = _reachable_basis(sys.A, sys.B)
    Ac, Bc, Cc = V.conj().T @ sys.A @ V, V.conj().T @ sys.B, sys.C @ V
    if Ac.shape[0] == 0:
        return Ac, Bc, Cc
    W = _reachable_basis(Ac.conj().T, Cc.conj().T)
    return W.conj().T @ Ac @ W, W.conj().T @ Bc, Cc @ W


def impulse_l1_bound(sys: LtiSystem, A=None, B=None, C=None, tol: float = 1e-8) -> float:
    """``int_0^inf ||C e^{tA} B|| dt``, an upper bound for the input-output norm on every ``L^p``."""
    A = sys.A if A is None else A
    B = sys.B if B is None else B
    C = sys.C if C is None else C
    if A.shape[0] == 0 or not np.any(B) or not np.any(C):
        return 0.0
    s = float(eigenvalues(A).real.max())
    if s >= 0:
        return math.inf
    beta = -s / 2.0
    exact = sys.norm_U == sys.norm_Y and sys.norm_U.is_exact

    def integrand(t):
        H = C[None] @ expm(np.asarray(t)[:, None, None] * A[None]) @ B[None]
        # sum of moduli dominates every induced l^p norm
        return batch_induced_norm(H, sys.norm_U, sys.norm_Y) if exact else np.abs(H).sum(axis=(-2, -1))

    ts = np.linspace(0.0, 10.0 / -s, 201)
    M = 2.0 * float((integrand(ts) * np.exp(beta * ts)).max()) * max(1, A.shape[0]) + 1e-300
    return integrate_decaying(integrand, (M, beta), Quadrature(tol=tol))


@dataclass(frozen=True)
class StabilityVerdict:
    internal: bool
    stabilizable: bool
    detectable: bool
    externally_bounded: bool
    io_bounded: bool
    consistent: bool
    abscissa: float
    io_norm_bound: float
    minimal_order: int
    p: float


def internal_external_check(sys: LtiSystem, p: float = 2.0) -> StabilityVerdict:
    """Evaluate every flag of the internal/external stability equivalence.

    ``externally_bounded`` is decided from the spectrum of the minimal
    realization (no poles with ``Re >= 0``).  ``io_bounded`` requires a finite
    certificate: the impulse-response integral of the minimal realization,
    which bounds the input-output norm on ``L^p`` for every ``p``.
    """
    abscissa = float(eigenvalues(sys.A).real.max())
    internal = abscissa < 0.0
    stab = hautus_stabilizable(sys)
    det = hautus_detectable(sys)
    Am, Bm, Cm = minimal_realization(sys)
    if Am.shape[0] == 0:
        external = True
    else:
        external = float(eigenvalues(Am).real.max()) < 0.0
    bound = impulse_l1_bound(sys, Am, Bm, Cm) if external else math.inf
    io_bounded = math.isfinite(bound)
    consistent = internal == (stab and det and io_bounded)
    return StabilityVerdict(internal, stab, det, external, io_bounded, consistent,
                            abscissa, float(bound), int(Am.shape[0]), float(p))
