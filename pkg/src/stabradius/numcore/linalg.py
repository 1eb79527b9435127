"""Dense complex matrices, l^p vector norms and induced operator norms.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_matrix`
is the single validation gate.  Norms on ``C^n`` are described by
:class:`NormSpec`.  For equal exponents in ``{1, 2, inf}`` the induced norm is
computed from its closed form; any other combination is estimated from below
by a multi-start dual power iteration and flagged as non-exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from ..errors import InputError, SpectrumError

Matrix = np.ndarray

N_STARTS = 16
POWER_ITERS = 60


def as_matrix(M, name: str = "matrix") -> Matrix:
    """Return ``M`` as a finite, non-empty 2-D complex array."""
    try:
        arr = np.array(M, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name}: cannot convert to a complex matrix ({exc})") from None
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InputError(f"{name}: expected a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name}: empty matrix of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: entries must be finite")
    return arr


def as_square(M, name: str = "matrix") -> Matrix:
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name}: expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class NormSpec:
    """The l^p norm carried by a finite-dimensional space, ``1 <= p <= inf``."""

    p: float = 2.0

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise InputError(f"norm exponent must lie in [1, inf], got {self.p!r}")
        object.__setattr__(self, "p", p)

    @classmethod
    def parse(cls, value: Union["NormSpec", str, float, int, dict]) -> "NormSpec":
        """Accept ``"l1"``, ``"l2"``, ``"linf"``, a number, or ``{"p": value}``."""
        if isinstance(value, NormSpec):
            return value
        if isinstance(value, dict):
            if set(value) != {"p"}:
                raise InputError(f"norm object must be {{'p': value}}, got {value!r}")
            return cls(float(value["p"]))
        if isinstance(value, str):
            key = value.strip().lower()
            named = {"l1": 1.0, "l2": 2.0, "linf": math.inf, "inf": math.inf}
            if key in named:
                return cls(named[key])
            try:
                return cls(float(key))
            except ValueError:
                raise InputError(f"unknown norm {value!r}") from None
        if isinstance(value, (int, float)):
            return cls(float(value))
        raise InputError(f"unknown norm {value!r}")

    @property
    def dual(self) -> "NormSpec":
        """The norm of the dual space (conjugate exponent)."""
        if self.p == 1.0:
            return NormSpec(math.inf)
        if math.isinf(self.p):
            return NormSpec(1.0)
        return NormSpec(self.p / (self.p - 1.0))

    @property
    def is_exact(self) -> bool:
        return self.p in (1.0, 2.0) or math.isinf(self.p)

    def to_json(self):
        if self.p == 1.0:
            return "l1"
        if self.p == 2.0:
            return "l2"
        if math.isinf(self.p):
            return "linf"
        return {"p": self.p}

    def __str__(self):
        return "inf" if math.isinf(self.p) else f"{self.p:g}"


L1 = NormSpec(1.0)
L2 = NormSpec(2.0)
LINF = NormSpec(math.inf)


def vector_norm(v, norm: NormSpec, axis: int = -1) -> np.ndarray:
    """l^p norm along ``axis`` (vectorised over the remaining axes)."""
    a = np.abs(np.asarray(v))
    p = norm.p
    if p == 1.0:
        return a.sum(axis=axis)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    if math.isinf(p):
        return a.max(axis=axis)
    scale = a.max(axis=axis, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return np.squeeze(scale, axis=axis) * ((a / scale) ** p).sum(axis=axis) ** (1.0 / p)


def norming_vector(v, norm: NormSpec) -> np.ndarray:
    """Unit vector ``w`` of the dual norm with ``w^H v = ||v||``.

    This is the explicit norming functional of ``v``: sign pattern for l1,
    normalised conjugate for l2, the extreme coordinate for l-infinity and the
    dual-exponent power functional otherwise.  ``v`` must be non-zero.
    """
    v = np.asarray(v, dtype=complex)
    nv = float(vector_norm(v, norm))
    if nv == 0.0:
        raise InputError("norming functional of the zero vector is undefined")
    mag = np.abs(v)
    phase = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 0.0)
    p = norm.p
    if p == 1.0:
        return phase
    if p == 2.0:
        return v / nv
    if math.isinf(p):
        w = np.zeros_like(v)
        j = int(np.argmax(mag))
        w[j] = phase[j]
        return w
    return phase * (mag / nv) ** (p - 1.0)


@dataclass(frozen=True)
class InducedNorm:
    """Induced norm value together with a unit vector that attains it."""

    value: float
    witness: np.ndarray
    exact: bool


def _check_pair(M, domain, codomain):
    M = as_matrix(M)
    return M, NormSpec.parse(domain), NormSpec.parse(codomain)


def induced_norm_estimate(M, domain=L2, codomain=None, seed: int = 0) -> InducedNorm:
    """Induced norm ``sup ||Mx||_codomain / ||x||_domain`` with a maximising ``x``.

    Equal exponents in ``{1, 2, inf}`` use closed forms and are exact.  All
    other cases run a multi-start dual power iteration (basis vectors plus
    random-phase starts); the returned value is attained by the returned
    witness and hence is a lower bound, flagged ``exact=False``.
    """
    M, dom, cod = _check_pair(M, domain, domain if codomain is None else codomain)
    m, n = M.shape
    if dom == cod and dom.is_exact:
        if dom.p == 1.0:
            sums = np.abs(M).sum(axis=0)
            j = int(np.argmax(sums))
            x = np.zeros(n, dtype=complex)
            x[j] = 1.0
            return InducedNorm(float(sums[j]), x, True)
        if dom.p == 2.0:
            _, sv, vh = np.linalg.svd(M)
            return InducedNorm(float(sv[0]), vh[0].conj(), True)
        sums = np.abs(M).sum(axis=1)
        i = int(np.argmax(sums))
        row = M[i]
        mag = np.abs(row)
        x = np.where(mag > 0, row.conj() / np.where(mag > 0, mag, 1.0), 1.0)
        return InducedNorm(float(sums[i]), x.astype(complex), True)
    return _power_estimate(M, dom, cod, seed)


def _norming_batch(V: np.ndarray, norm: NormSpec) -> np.ndarray:
    """:func:`norming_vector` along the last axis; zero rows map to zero."""
    nv = vector_norm(V, norm)[..., None]
    safe = np.where(nv > 0, nv, 1.0)
    mag = np.abs(V)
    phase = np.where(mag > 0, V / np.where(mag > 0, mag, 1.0), 0.0)
    p = norm.p
    if p == 1.0:
        out = phase
    elif p == 2.0:
        out = V / safe
    elif math.isinf(p):
        j = np.argmax(mag, axis=-1)[..., None]
        out = np.zeros_like(V)
        np.put_along_axis(out, j, np.take_along_axis(phase, j, axis=-1), axis=-1)
    else:
        out = phase * (mag / safe) ** (p - 1.0)
    return np.where(nv > 0, out, 0.0)


def _power_batch(stack: np.ndarray, dom: NormSpec, cod: NormSpec, seed: int = 0):
    """Multi-start dual power iteration on a stack ``(N, m, n)``; returns values and witnesses."""
    N, m, n = stack.shape
    rng = np.random.default_rng(seed)
    starts = [np.eye(n, dtype=complex)[j] for j in range(n)]
    while len(starts) < max(N_STARTS, n):
        starts.append(np.exp(2j * np.pi * rng.random(n)) * (0.5 + rng.random(n)))
    X = np.array(starts)
    X = np.broadcast_to(X / vector_norm(X, dom)[:, None], (N,) + X.shape).copy()  # (N, S, n)
    MT = np.swapaxes(stack, -1, -2)
    Mc = stack.conj()  # rows: (M^H w)^T = w^T conj(M)
    val = vector_norm(X @ MT, cod)  # (N, S)
    active = np.ones(val.shape, dtype=bool)
    for _ in range(POWER_ITERS):
        if not active.any():
            break
        Z = _norming_batch(X @ MT, cod) @ Mc
        X_new = _norming_batch(Z, dom.dual)
        scale = vector_norm(X_new, dom)[..., None]
        X_new = X_new / np.where(scale > 0, scale, 1.0)
        new_val = vector_norm(X_new @ MT, cod)
        valid = active & (scale[..., 0] > 0)
        grew = valid & (new_val > val * (1 + 1e-14))
        stalled = valid & ~grew
        take = grew | (stalled & (new_val > val))
        X[take] = X_new[take]
        val = np.where(take, new_val, val)
        active = grew
    best = np.argmax(val, axis=1)
    idx = np.arange(N)
    return np.maximum(val[idx, best], 0.0), X[idx, best]


def _power_estimate(M, dom: NormSpec, cod: NormSpec, seed: int) -> InducedNorm:
    vals, wits = _power_batch(M[None], dom, cod, seed)
    return InducedNorm(float(vals[0]), wits[0], False)


def induced_pnorm(M, domain=L2, codomain=None) -> float:
    """Induced operator norm of ``M`` (see :func:`induced_norm_estimate`)."""
    return induced_norm_estimate(M, domain, codomain).value


def induced_norm_upper(M, domain=L2, codomain=None) -> float:
    """A guaranteed upper bound on the induced norm.

    Exact for equal exponents in ``{1, 2, inf}``; otherwise the crude bound
    ``sum |m_ij|`` which holds for every pair of l^p norms.
    """
    M, dom, cod = _check_pair(M, domain, domain if codomain is None else codomain)
    if dom == cod and dom.is_exact:
        return induced_norm_estimate(M, dom, cod).value
    return float(np.abs(M).sum())


def batch_induced_norm(stack: np.ndarray, domain: NormSpec, codomain: NormSpec) -> np.ndarray:
    """Induced norms of a stack of matrices with shape ``(N, rows, cols)``."""
    stack = np.asarray(stack)
    if domain == codomain and domain.p == 1.0:
        return np.abs(stack).sum(axis=-2).max(axis=-1)
    if domain == codomain and math.isinf(domain.p):
        return np.abs(stack).sum(axis=-1).max(axis=-1)
    if domain == codomain and domain.p == 2.0:
        if stack.shape[-1] == 1 or stack.shape[-2] == 1:
            return np.sqrt((np.abs(stack) ** 2).sum(axis=(-2, -1)))
        # largest singular value from the eigenvalues of the Gram matrix
        if stack.shape[-1] <= stack.shape[-2]:
            gram = np.conj(np.swapaxes(stack, -1, -2)) @ stack
        else:
            gram = stack @ np.conj(np.swapaxes(stack, -1, -2))
        return np.sqrt(np.maximum(np.linalg.eigvalsh(gram)[..., -1], 0.0))
    return _power_batch(stack.astype(complex), domain, codomain)[0]


def resolvent_apply(A, lam: complex, V, rtol: float = 1e-13) -> Matrix:
    """Solve ``(A - lam I) X = V`` by LU with partial pivoting.

    Raises :class:`SpectrumError` when a pivot of the LU factor is below
    ``rtol * ||A - lam I||``, i.e. when ``lam`` is numerically an eigenvalue.
    """
    A = as_square(A, "A")
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != A.shape[0]:
        raise InputError(f"right-hand side has {V.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    shifted = A - lam * np.eye(A.shape[0])
    scale = max(np.abs(shifted).sum(axis=0).max(), np.finfo(float).tiny)
    with warnings.catch_warnings():
        # exact singularity is reported below as SpectrumError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(shifted, check_finite=False)
    if np.abs(np.diag(lu)).min() <= rtol * scale:
        raise SpectrumError(f"lambda = {complex(lam):.6g} in spectrum of A (singular A - lambda I)")
    return scipy.linalg.lu_solve((lu, piv), V, check_finite=False)
