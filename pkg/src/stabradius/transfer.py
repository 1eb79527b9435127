"""Transfer functions ``H(lam) = C (A - lam)^{-1} B`` and their suprema.

Sign convention: this package evaluates ``C (A - lam)^{-1} B``.  The frequency
response ``C (lam - A)^{-1} B`` differs only by sign, so every norm below is
the same under either convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, SpectrumError
from .numcore import (
    L2,
    NormSpec,
    as_matrix,
    as_square,
    batch_induced_norm,
    eigenvalues,
    induced_norm_upper,
    maximize_on_line,
    resolvent_apply,
)

AXIS_GAP = 1e-9


@dataclass(frozen=True)
class LtiSystem:
    """Autonomous system ``x' = Ax + Bu, y = Cx`` with l^p norms on X, U, Y."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    norm_X: NormSpec = L2
    norm_U: NormSpec = L2
    norm_Y: NormSpec = L2

    def __post_init__(self):
        A = as_square(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if B.shape[0] != n:
            raise InputError(f"B has {B.shape[0]} rows but A is {n}x{n}")
        if C.shape[1] != n:
            raise InputError(f"C has {C.shape[1]} columns but A is {n}x{n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        for name in ("norm_X", "norm_U", "norm_Y"):
            object.__setattr__(self, name, NormSpec.parse(getattr(self, name)))

    @classmethod
    def unstructured(cls, A, norm=L2) -> "LtiSystem":
        """``B = C = I`` with the same norm on all three spaces."""
        A = as_square(A, "A")
        eye = np.eye(A.shape[0])
        norm = NormSpec.parse(norm)
        return cls(A, eye, eye, norm, norm, norm)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def replace(self, **changes) -> "LtiSystem":
        fields = dict(A=self.A, B=self.B, C=self.C, norm_X=self.norm_X,
                      norm_U=self.norm_U, norm_Y=self.norm_Y)
        fields.update(changes)
        return LtiSystem(**fields)

    def shifted(self, mu: complex) -> "LtiSystem":
        """The system with generator ``A - mu I``."""
        return self.replace(A=self.A - mu * np.eye(self.n))

    # crude but guaranteed operator-norm bounds used by truncation envelopes
    def bound_A(self) -> float:
        return induced_norm_upper(self.A, self.norm_X, self.norm_X)

    def bound_B(self) -> float:
        return induced_norm_upper(self.B, self.norm_U, self.norm_X)

    def bound_C(self) -> float:
        return induced_norm_upper(self.C, self.norm_X, self.norm_Y)


@dataclass(frozen=True)
class SpectralSummary:
    abscissa: float
    hyperbolic: bool
    axis_gap: float
    stable: bool
    growth_bound: float
    eigenvalues: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class FrequencySupremum:
    """``sup ||H(i s)||`` over the real axis or over a shifted integer lattice."""

    value: float
    argmax: float
    kind: str
    shift: float = 0.0
    tolerance: float = 0.0
    grid: Optional[np.ndarray] = field(default=None, repr=False)
    samples: Optional[np.ndarray] = field(default=None, repr=False)


def spectral_summary(A, gap: float = AXIS_GAP) -> SpectralSummary:
    """Spectral abscissa, stability and hyperbolicity of a generator.

    At finite dimension the spectral abscissa equals the growth bound.
    """
    ev = eigenvalues(A)
    s = float(ev.real.max())
    axis_gap = float(np.abs(ev.real).min())
    return SpectralSummary(
        abscissa=s,
        hyperbolic=axis_gap >= gap,
        axis_gap=axis_gap,
        stable=s < 0.0,
        growth_bound=s,
        eigenvalues=ev,
    )


def transfer_eval(sys: LtiSystem, lam: complex) -> np.ndarray:
    """``C (A - lam)^{-1} B``; raises :class:`SpectrumError` for ``lam`` in the spectrum."""
    return sys.C @ resolvent_apply(sys.A, lam, sys.B)


def transfer_on_axis(sys: LtiSystem, s) -> np.ndarray:
    """Stack of ``C (A - i s_j)^{-1} B`` for an array of real frequencies."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n = sys.n
    out = np.empty((len(s), sys.C.shape[0], sys.B.shape[1]), dtype=complex)
    eye = np.eye(n)
    for lo in range(0, len(s), 65536):
        chunk = s[lo:lo + 65536]
        R = np.linalg.inv(sys.A[None, :, :] - 1j * chunk[:, None, None] * eye)
        out[lo:lo + 65536] = sys.C @ R @ sys.B
    return out


def transfer_norms(sys: LtiSystem, s) -> np.ndarray:
    """``||H(i s_j)||`` in the induced ``norm_U -> norm_Y`` norm."""
    return batch_induced_norm(transfer_on_axis(sys, s), sys.norm_U, sys.norm_Y)


def _check_axis(sys: LtiSystem):
    summary = spectral_summary(sys.A)
    if not summary.hyperbolic:
        raise SpectrumError(
            f"imaginary-axis spectrum detected (|Re lambda| = {summary.axis_gap:.3g})"
        )
    return summary


def _envelope(sys: LtiSystem):
    a, bc = sys.bound_A(), sys.bound_B() * sys.bound_C()

    def env(S):
        return math.inf if S <= a else bc / (S - a)

    return env, a


def sup_transfer_real_axis(sys: LtiSystem, tol: float = 1e-9) -> FrequencySupremum:
    """``sup_s ||C (A - i s)^{-1} B||`` for ``A`` without imaginary-axis spectrum."""
    _check_axis(sys)
    env, a = _envelope(sys)
    window = a + 10.0
    # Lipschitz bound from ||R'|| <= ||R||^2, estimated on a coarse scan
    coarse = np.linspace(-window, window, 4001)
    eye = np.eye(sys.n)
    R = np.linalg.inv(sys.A[None] - 1j * coarse[:, None, None] * eye)
    r_max = float(batch_induced_norm(R, sys.norm_X, sys.norm_X).max())
    lipschitz = 2.0 * sys.n * sys.bound_B() * sys.bound_C() * r_max ** 2
    exact = sys.norm_U == sys.norm_Y and sys.norm_U.is_exact
    res = maximize_on_line(
        lambda s: transfer_norms(sys, s), window, env, tol=tol, lipschitz=lipschitz,
        max_points=100_001 if exact else 4001,
    )
    return FrequencySupremum(res.value, res.argmax, "real-axis", 0.0, tol, res.grid, res.samples)


def _lattice_collision(ev, xi: float, gap: float) -> bool:
    k = np.round(ev.imag - xi)
    return bool(np.any(np.abs(ev - 1j * (xi + k)) < gap))


def sup_transfer_integers(sys: LtiSystem, xi: float = 0.0, tol: float = 1e-9) -> FrequencySupremum:
    """``max_k ||C (A - i xi - i k)^{-1} B||`` over ``k`` in the integers.

    The lattice is truncated once the resolvent-decay envelope
    ``||B|| ||C|| / (|k + xi| - ||A||)`` drops below the running maximum.
    """
    ev = eigenvalues(sys.A)
    if _lattice_collision(ev, xi, AXIS_GAP):
        raise SpectrumError(f"lattice point i(k + {xi:g}) lies in the spectrum of A")
    env, a = _envelope(sys)
    K = int(math.ceil(a + abs(xi))) + 2
    while True:
        ks = np.arange(-K, K + 1)
        vals = transfer_norms(sys, ks + xi)
        best = float(vals.max())
        if env(K - abs(xi)) <= best + tol:
            break
        K *= 2
    i = int(np.argmax(vals))
    return FrequencySupremum(best, int(ks[i]), "integer-lattice", float(xi), tol, ks, vals)
