"""Complex stability radii of ``A + B Delta C`` and their certificates.

For an exponentially stable system the radius is bracketed by

    1 / ||L||  <=  r_stab  <=  1 / sup_s ||C (A - i s)^{-1} B||

where ``L`` is the input-output operator on ``L^p``.  Every generator here is a
matrix, hence bounded, so the right-hand side is the exact constant radius;
:func:`destabilizing_perturbation` constructs the rank-one ``Delta`` that
attains it.  The left-hand side still depends on ``p`` and the norms, which is
where the strict gap shows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, SpectrumError, UnstableSystemError
from .ionorm import (
    IoNormEstimate,
    io_norm_l1,
    io_norm_l2_hilbert,
    multiplier_lower_bound,
    periodic_multiplier_norm,
)
from .nonaut import io_norm_l1_tv
from .numcore import (
    eigenvalues,
    expm,
    golden_section_max,
    induced_norm_estimate,
    induced_norm_upper,
    norming_vector,
    vector_norm,
)
from .transfer import (
    LtiSystem,
    spectral_summary,
    sup_transfer_integers,
    sup_transfer_real_axis,
    transfer_eval,
)


@dataclass(frozen=True)
class Perturbation:
    """A feedback disturbance ``Delta: Y -> U`` and how it was built."""

    delta: np.ndarray
    norm: float
    frequency: float
    u_bar: Optional[np.ndarray] = None
    y_star: Optional[np.ndarray] = None

    def perturbed_generator(self, sys: LtiSystem) -> np.ndarray:
        return sys.A + sys.B @ self.delta @ sys.C


@dataclass
class RadiusReport:
    lower: float
    upper: float
    exact: Optional[float]
    strict_gap: bool
    lower_exact: bool
    p: float
    io_norm: IoNormEstimate = None
    frequency: float = 0.0
    tolerance: float = 0.0
    destabilizer: Optional[Perturbation] = None
    xi_trace: list = field(default_factory=list)


def _io_norm(sys: LtiSystem, p: float, seed: int = 0) -> IoNormEstimate:
    if p == 1.0:
        return io_norm_l1(sys, seed=seed)
    if p == 2.0 and sys.norm_U.p == 2.0 and sys.norm_Y.p == 2.0:
        return io_norm_l2_hilbert(sys)
    return multiplier_lower_bound(sys, p, seed=seed)


def radius_bounds(sys: LtiSystem, p: float = 2.0, tol: float = 1e-9, seed: int = 0,
                  with_destabilizer: bool = True) -> RadiusReport:
    """Lower bound ``1/||L||``, upper bound and exact value of the constant radius.

    The lower bound is exact for ``p = 1`` with an l1 input norm and for
    ``p = 2`` with Euclidean input/output; otherwise ``||L||`` is only bounded
    from below, so the reported ``lower`` over-estimates the true lower bound
    and ``lower_exact`` is False.
    """
    summary = spectral_summary(sys.A)
    if not summary.stable:
        raise UnstableSystemError(
            f"stability radius needs an exponentially stable system (s(A) = {summary.abscissa:.6g})"
        )
    io = _io_norm(sys, float(p), seed)
    sup = sup_transfer_real_axis(sys, tol)
    lower = math.inf if io.value == 0.0 else 1.0 / io.value
    upper = math.inf if sup.value == 0.0 else 1.0 / sup.value
    slack = 1e-6 * max(1.0, upper) if math.isfinite(upper) else 0.0
    destab = None
    if with_destabilizer and sup.value > 0.0:
        destab = destabilizing_perturbation(sys, sup.argmax)
    return RadiusReport(
        lower=lower,
        upper=upper,
        exact=upper,
        strict_gap=bool(upper - lower > slack),
        lower_exact=io.exact,
        p=float(p),
        io_norm=io,
        frequency=sup.argmax,
        tolerance=tol,
        destabilizer=destab,
    )


def destabilizing_perturbation(sys: LtiSystem, s_star: float) -> Perturbation:
    """Rank-one ``Delta`` with ``||Delta|| = 1/||H(i s*)||`` placing ``i s*`` in the spectrum.

    ``u_bar`` attains the induced norm of ``H(i s*)`` on the unit sphere of
    ``U``; ``y*`` norms ``h = H(i s*) u_bar``; ``Delta y = -<y*, y> u_bar / ||h||``.
    Then ``Delta H(i s*) u_bar = -u_bar`` and ``(A - i s* + B Delta C) v = 0`` for
    ``v = (A - i s*)^{-1} B u_bar``.
    """
    H = transfer_eval(sys, 1j * s_star)
    est = induced_norm_estimate(H, sys.norm_U, sys.norm_Y)
    u_bar = est.witness / vector_norm(est.witness, sys.norm_U)
    h = H @ u_bar
    h_norm = float(vector_norm(h, sys.norm_Y))
    if h_norm == 0.0:
        raise SpectrumError(f"transfer function vanishes at s* = {s_star:g}; no destabiliser")
    y_star = norming_vector(h, sys.norm_Y)
    delta = -np.outer(u_bar, y_star.conj()) / h_norm
    norm = induced_norm_upper(delta, sys.norm_Y, sys.norm_U)
    if not (sys.norm_Y == sys.norm_U and sys.norm_U.is_exact):
        # rank one: ||u_bar w^H|| = ||u_bar||_U * ||w||_{Y*}
        norm = float(vector_norm(u_bar, sys.norm_U) * vector_norm(y_star, sys.norm_Y.dual)) / h_norm
    return Perturbation(delta, float(norm), float(s_star), u_bar, y_star)


def pointwise_radius_bounds(sys: LtiSystem, xi: float = 0.0, p: float = 2.0, seed: int = 0):
    """``(1 / ||C Gamma_per^{-1} B||, 1 / sup_k ||C (A - i xi - i k)^{-1} B||)``.

    Bounds on the smallest constant ``Delta`` putting ``1`` in the spectrum of
    ``exp(2 pi (A - i xi + B Delta C))``.
    """
    per = periodic_multiplier_norm(sys, xi, p, seed=seed)
    lat = sup_transfer_integers(sys, xi)
    lower = math.inf if per.value == 0.0 else 1.0 / per.value
    upper = math.inf if lat.value == 0.0 else 1.0 / lat.value
    return lower, upper


@dataclass(frozen=True)
class DichotomyRadius:
    value: float
    xi: float
    trace: list


def dichotomy_radius(sys: LtiSystem, p: float = 2.0, xi_grid: int = 64) -> DichotomyRadius:
    """Smallest constant ``Delta`` destroying hyperbolicity, via a sweep over ``xi``.

    ``inf_xi 1 / sup_k ||H(i (k + xi))||`` over ``xi in [0, 1]``: a uniform grid
    followed by golden-section refinement around the best grid point.  The
    lattice bound is independent of ``p``; ``p`` is recorded for reporting.
    """
    summary = spectral_summary(sys.A)
    if not summary.hyperbolic:
        raise SpectrumError("dichotomy radius needs a hyperbolic generator")

    def lattice_sup(xi):
        return sup_transfer_integers(sys, float(xi)).value

    xs = np.linspace(0.0, 1.0, xi_grid, endpoint=False)
    vals = np.array([lattice_sup(x) for x in xs])
    trace = [(float(x), 1.0 / v if v > 0 else math.inf) for x, v in zip(xs, vals)]
    i = int(np.argmax(vals))
    h = xs[1] - xs[0]
    xi_best, v_best = golden_section_max(lattice_sup, xs[i] - h, xs[i] + h, xtol=1e-12)
    if vals[i] > v_best:
        xi_best, v_best = xs[i], vals[i]
    xi_best = float(xi_best % 1.0)
    value = math.inf if v_best == 0.0 else 1.0 / v_best
    return DichotomyRadius(value, xi_best, trace)


def growth_bound_scan(sys: LtiSystem, alphas, horizon_doublings: int = 13):
    """Growth bound and, for each ``alpha``, whether ``A - alpha`` passes a finiteness probe.

    The probe declares the input-output operator of ``A - alpha`` finite when
    (i) the resolvent is bounded on a frequency grid and (ii) the Datko-type
    tail ``||exp(T (A - alpha))||`` at ``T = 2^k`` has decayed below ``1e-3``
    and keeps decreasing under the last horizon doubling.
    """
    alphas = [float(a) for a in alphas]
    if alphas != sorted(alphas):
        raise InputError("alpha values must be sorted ascending")
    omega0 = float(eigenvalues(sys.A).real.max())
    scan = []
    for a in alphas:
        shifted = sys.A - a * np.eye(sys.n)
        scan.append((a, _finite_probe(shifted, horizon_doublings)))
    return omega0, scan


def _finite_probe(A: np.ndarray, doublings: int) -> bool:
    n = A.shape[0]
    grid = np.linspace(-50.0, 50.0, 2001)
    mats = A[None] - 1j * grid[:, None, None] * np.eye(n)
    sv_min = np.linalg.svd(mats, compute_uv=False)[:, -1]
    if sv_min.min() < 1e-10 * max(1.0, np.abs(A).max()):
        return False
    E = expm(A)
    norms = [float(np.linalg.norm(E, 2))]
    for _ in range(doublings):
        if not math.isfinite(norms[-1]) or norms[-1] > 1e150:
            return False
        E = E @ E
        norms.append(float(np.linalg.norm(E, 2)))
    return norms[-1] < 1e-3 and norms[-1] <= norms[-2]


def timevarying_radius_lower_bound(sys, horizon: float = 40.0) -> float:
    """``1 / ||L||`` on ``L^1`` for a time-varying system, ``||L||`` by lattice quadrature.

    No upper formula is available for genuinely time-varying systems, so only
    this bound is reported.  A finite horizon under-estimates ``||L||``; choose
    it long enough for the responses to decay.
    """
    value = io_norm_l1_tv(sys, horizon)
    return math.inf if value == 0.0 else 1.0 / value
