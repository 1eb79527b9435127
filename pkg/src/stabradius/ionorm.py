"""Norms of the input-output operator ``u -> C int_0^t e^{(t-r)A} B u(r) dr``.

* ``p = 1``: exact time-domain formula ``sup_u int_0^inf ||C e^{tA} B u|| dt``
  (extreme points of the l1 ball are the basis directions).
* ``p = 2`` with Euclidean input and output norms: the supremum of the
  transfer function on the imaginary axis.
* any ``p``: a lower bound from Fourier-multiplier test functions, i.e.
  Gaussian-windowed trigonometric polynomials pushed through ``H(i s)``.
* periodic inputs: the multiplier norm over ``2 pi``-periodic trigonometric
  polynomials with the shifted lattice ``H(i (k + xi))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, NumericalError, UnstableSystemError
from .numcore import Quadrature, expm, induced_norm_estimate, integrate_decaying, vector_norm
from .transfer import (
    LtiSystem,
    spectral_summary,
    sup_transfer_integers,
    sup_transfer_real_axis,
    transfer_on_axis,
)

EXACT_L1 = "exact-L1"
EXACT_L2 = "exact-L2"
SEARCH = "lower-bound-search"


@dataclass(frozen=True)
class IoNormEstimate:
    """Value of an input-output norm and how it was obtained.

    Exact modes are two-sided within quadrature/search tolerance; the search
    mode is one-sided (never above the true norm up to discretisation error).
    """

    p: float
    value: float
    mode: str
    witness: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.mode != SEARCH


def _require_stable(sys: LtiSystem):
    summary = spectral_summary(sys.A)
    if not summary.stable:
        raise UnstableSystemError(
            f"system is not exponentially stable (spectral abscissa {summary.abscissa:.6g})"
        )
    return summary


# --------------------------------------------------------------------------
# p = 1


def _decay_envelope(sys: LtiSystem, abscissa: float):
    """``(M, beta)`` with ``||C e^{tA} B|| <= M e^{-beta t}`` (sampled, padded by 2x)."""
    beta = -abscissa / 2.0
    ts = np.linspace(0.0, 10.0 / -abscissa, 201)
    E = expm(ts[:, None, None] * sys.A[None])
    # n * max column sum dominates every l^p induced norm on C^n
    norms = np.abs(E).sum(axis=-2).max(axis=-1) * sys.n
    M = 2.0 * float((norms * np.exp(beta * ts)).max()) * sys.bound_B() * sys.bound_C()
    return max(M, 1e-300), beta


def _response(sys: LtiSystem, ts, u: np.ndarray) -> np.ndarray:
    """``C e^{tA} B u`` for each ``t`` in ``ts``, shape ``(len(ts), k)``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    v = sys.B @ u
    out = np.empty((len(ts), sys.C.shape[0]), dtype=complex)
    for lo in range(0, len(ts), 4096):
        chunk = ts[lo:lo + 4096]
        E = expm(chunk[:, None, None] * sys.A[None])
        out[lo:lo + 4096] = (E @ v) @ sys.C.T
    return out


def _kink_functions(sys: LtiSystem, Y: np.ndarray):
    """Signed functions of the response whose zeros are kinks of ``||y(t)||_Y``.

    Each entry is ``(values_on_grid, fn)`` where ``fn`` maps a response vector
    to the same signed quantity.
    """
    p = sys.norm_Y.p
    scale = float(np.abs(Y).max()) or 1.0
    out = []
    if p == 1.0:
        for j in range(Y.shape[1]):
            if np.abs(Y[:, j].imag).max() <= 1e-12 * scale:
                out.append((Y[:, j].real, lambda y, j=j: y[j].real))
    elif math.isinf(p):
        mag = np.abs(Y)
        for i in range(Y.shape[1]):
            for j in range(i + 1, Y.shape[1]):
                out.append((mag[:, i] - mag[:, j], lambda y, i=i, j=j: abs(y[i]) - abs(y[j])))
    return out


def response_kinks(sys: LtiSystem, u, horizon: float) -> list:
    """Non-smooth points of ``t -> ||C e^{tA} B u||_Y`` on ``(0, horizon)``.

    Only l1 (sign changes of real-valued components) and l-infinity (switches
    of the maximising component) produce kinks.  Roots are bracketed on a grid
    resolving the fastest modal oscillation and refined by Brent's method.
    """
    if sys.norm_Y.p not in (1.0, math.inf) or horizon <= 0:
        return []
    u = np.asarray(u, dtype=complex).reshape(-1)
    omega = float(np.abs(np.linalg.eigvals(sys.A).imag).max()) + 1.0
    n_pts = int(min(200_000, max(2001, horizon * omega * 16)))
    ts = np.linspace(0.0, horizon, n_pts)
    Y = _response(sys, ts, u)
    kinks = []
    for vals, fn in _kink_functions(sys, Y):
        def scalar(t, fn=fn):
            return float(fn(_response(sys, t, u)[0]))

        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            kinks.append(brentq(scalar, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return sorted(set(kinks))


def l1_response_integral(sys: LtiSystem, u, tol: float = 1e-10) -> float:
    """``int_0^inf ||C e^{tA} B u||_Y dt`` for a stable system and a fixed input ``u``."""
    summary = _require_stable(sys)
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.shape[0] != sys.B.shape[1]:
        raise InputError(f"input direction has length {u.shape[0]}, expected {sys.B.shape[1]}")
    M, beta = _decay_envelope(sys, summary.abscissa)
    M *= float(vector_norm(u, sys.norm_U)) or 1.0
    T = Quadrature(tol=tol).horizon(M, beta)
    quad = Quadrature(tol=tol, kinks=tuple(response_kinks(sys, u, T)))

    def integrand(ts):
        return vector_norm(_response(sys, ts, u), sys.norm_Y)

    return integrate_decaying(integrand, (M, beta), quad)


def _sphere_search(sys: LtiSystem, seed: int, budget: int = 300):
    """Direction ``u`` (unit in ``norm_U``) approximately maximising the L1 response."""
    summary = spectral_summary(sys.A)
    horizon = 40.0 / -summary.abscissa
    ts = np.linspace(0.0, horizon, 4001)
    E = expm(ts[:, None, None] * sys.A[None])
    Y = sys.C[None] @ E @ sys.B[None]  # (T, k, m)
    dt = ts[1] - ts[0]
    w = np.full(len(ts), dt)
    w[[0, -1]] *= 0.5

    def J(u):
        u = u / vector_norm(u, sys.norm_U)
        return float(w @ vector_norm(Y @ u, sys.norm_Y))

    m = sys.B.shape[1]
    rng = np.random.default_rng(seed)
    starts = [np.eye(m, dtype=complex)[j] for j in range(m)]
    while len(starts) < 16:
        starts.append(rng.normal(size=m) + 1j * rng.normal(size=m))
    vals = [J(u) for u in starts]
    best = int(np.argmax(vals))
    u, val = starts[best] / vector_norm(starts[best], sys.norm_U), vals[best]
    step = 0.5
    evals = 0
    while evals < budget and step > 1e-6:
        trial = u + step * (rng.normal(size=m) + 1j * rng.normal(size=m))
        tv = J(trial)
        evals += 1
        if tv > val:
            u, val = trial / vector_norm(trial, sys.norm_U), tv
        elif evals % 20 == 0:
            step *= 0.5
    return u


def io_norm_l1(sys: LtiSystem, tol: float = 1e-10, seed: int = 0) -> IoNormEstimate:
    """Norm of the input-output operator on ``L^1``.

    With an l1 input norm the supremum over the unit ball is attained at a
    basis direction, so the maximum over columns is exact.  For other input
    norms the basis directions are complemented by a sphere search and the
    result is reported as a lower bound.
    """
    _require_stable(sys)
    m = sys.B.shape[1]
    candidates = [np.eye(m, dtype=complex)[j] for j in range(m)]
    exact = sys.norm_U.p == 1.0
    if not exact:
        candidates.append(_sphere_search(sys, seed))
    values = [l1_response_integral(sys, u, tol) for u in candidates]
    j = int(np.argmax(values))
    witness = {"direction": candidates[j]}
    if j < m:
        witness["column"] = j
    return IoNormEstimate(1.0, float(values[j]), EXACT_L1 if exact else SEARCH, witness)


# --------------------------------------------------------------------------
# p = 2, Hilbert input and output spaces


def io_norm_l2_hilbert(sys: LtiSystem, tol: float = 1e-9) -> IoNormEstimate:
    """``||L||`` on ``L^2`` for Euclidean ``U`` and ``Y``: ``sup_s ||H(i s)||_2``."""
    if sys.norm_U.p != 2.0 or sys.norm_Y.p != 2.0:
        raise InputError("the L^2 frequency formula needs Euclidean input and output norms")
    _require_stable(sys)
    res = sup_transfer_real_axis(sys, tol)
    return IoNormEstimate(2.0, res.value, EXACT_L2, {"frequency": res.argmax})


# --------------------------------------------------------------------------
# Fourier-multiplier lower bounds


@dataclass(frozen=True)
class TestFunction:
    """Gaussian-windowed trigonometric polynomial in the frequency variable.

    ``u_hat(s) = sum_j c_j exp(-(s - s_j)^2 / (2 width^2)) * direction`` with
    ``s_j = center + (j - J) * spacing``; in time this is a Gaussian envelope of
    width ``1 / width`` times a trigonometric polynomial.
    """

    __test__ = False

    center: float
    width: float
    coeffs: tuple = (1.0,)
    spacing: float = 0.0
    direction: tuple = (1.0,)

    def profile(self, s: np.ndarray) -> np.ndarray:
        J = (len(self.coeffs) - 1) / 2.0
        out = np.zeros_like(s, dtype=complex)
        for j, c in enumerate(self.coeffs):
            if c != 0:
                sj = self.center + (j - J) * self.spacing
                out += c * np.exp(-0.5 * ((s - sj) / self.width) ** 2)
        return out


class _MultiplierGrid:
    """Common frequency/time grid for one Gaussian width and center.

    ``y(t_m) = sum_k F(s_k) e^{i s_k t_m} ds`` is evaluated by one inverse FFT;
    the time window covers ``12 / width`` on either side of the origin plus the
    causal tail of the impulse response.
    """

    def __init__(self, sys: LtiSystem, center: float, width: float, decay: float,
                 n_points: int, stretch: float = 1.0):
        self.n = n_points
        span_t = stretch * (24.0 / width + 40.0 / decay)
        self.dt = span_t / n_points
        self.ds = 2.0 * math.pi / span_t
        self.t_lo = -12.0 / width
        k = np.arange(n_points)
        self.s = center + (k - n_points // 2) * self.ds
        self.H = transfer_on_axis(sys, self.s)  # (N, out, in)
        self.twiddle = np.exp(1j * k * self.ds * self.t_lo)

    def synth(self, F: np.ndarray) -> np.ndarray:
        # F has shape (N, dim); returns time samples up to a unimodular phase
        return np.fft.ifft(F * self.twiddle[:, None], axis=0) * self.n * self.ds

    def lp(self, y: np.ndarray, spatial, p: float) -> float:
        mag = vector_norm(y, spatial, axis=1)
        if math.isinf(p):
            return float(mag.max())
        peak = float(mag.max())
        if peak == 0.0:
            return 0.0
        return peak * float(((mag / peak) ** p).sum() * self.dt) ** (1.0 / p)


def _fits_grid(width: float, center: float, spread: float, decay: float, n_points: int) -> bool:
    span_t = 24.0 / width + 40.0 / decay
    span_s = 2.0 * math.pi * n_points / span_t
    return span_s >= 2.4 * (spread + 8.0 * width)


def multiplier_ratio(sys: LtiSystem, p: float, tf: TestFunction, n_points: int = 2 ** 14,
                     _grid: _MultiplierGrid = None, stretch: float = 1.0) -> float:
    """``||int H(is) u(s) e^{is.} ds||_{L^p(Y)} / ||int u(s) e^{is.} ds||_{L^p(U)}``."""
    decay = -spectral_summary(sys.A).abscissa
    grid = _grid or _MultiplierGrid(sys, tf.center, tf.width, decay, n_points, stretch)
    prof = tf.profile(grid.s)
    direction = np.asarray(tf.direction, dtype=complex)
    Fu = prof[:, None] * direction[None, :]
    Fy = grid.H @ direction * prof[:, None]
    den = grid.lp(grid.synth(Fu), sys.norm_U, p)
    if den == 0.0:
        return 0.0
    return grid.lp(grid.synth(Fy), sys.norm_Y, p) / den


def multiplier_lower_bound(sys: LtiSystem, p: float, budget: int = 150, n_points: int = 2 ** 14,
                           seed: int = 0) -> IoNormEstimate:
    """Lower bound on ``||L||`` on ``L^p`` from Fourier-multiplier test functions.

    Candidates (fixed order, so the value is non-decreasing in ``budget``):
    centers at the transfer-supremum frequency, ``0`` and its mirror; widths on
    a log grid from narrow (``<< decay rate``, realising pointwise values of
    ``H``) to broad (pulse-like inputs); directions from the induced-norm
    witness of ``H`` at the center and the basis of ``U``.  Leftover budget is
    spent on coordinate ascent over a five-term frequency comb around the best
    candidate.  The best ratio is re-evaluated on a doubled grid and the
    smaller of the two is returned.
    """
    if not 1.0 <= p < math.inf:
        raise InputError(f"time exponent must lie in [1, inf), got {p}")
    summary = _require_stable(sys)
    decay = -summary.abscissa
    if not np.any(sys.B) or not np.any(sys.C):
        return IoNormEstimate(p, 0.0, SEARCH, {"reason": "zero operator"})

    sup = sup_transfer_real_axis(sys, 1e-8)
    s_star = float(sup.argmax)
    scale = sys.bound_A() + decay
    widths = [decay * f for f in (0.01, 0.03, 0.1, 0.3, 1.0)] + [scale * f for f in (1.0, 3.0, 10.0, 30.0)]
    centers = [s_star] if abs(s_star) < 1e-12 else [s_star, 0.0, -s_star]
    m = sys.B.shape[1]

    grids = {}

    def grid_for(center, width, stretch=1.0):
        key = (center, width, stretch)
        if key not in grids:
            grids[key] = _MultiplierGrid(sys, center, width, decay, n_points, stretch)
        return grids[key]

    candidates = []
    for width in widths:
        if not _fits_grid(width, 0.0, 0.0, decay, n_points):
            continue
        for center in centers:
            H0 = grid_for(center, width).H[n_points // 2]
            dirs = [induced_norm_estimate(H0, sys.norm_U, sys.norm_Y, seed=seed).witness]
            dirs += [np.eye(m, dtype=complex)[j] for j in range(min(m, 4))]
            for d in dirs:
                candidates.append(TestFunction(center, width, (1.0,), 0.0, tuple(d)))

    evals = 0
    best_tf, best_val = None, -1.0
    for tf in candidates:
        if evals >= budget:
            break
        val = multiplier_ratio(sys, p, tf, n_points, grid_for(tf.center, tf.width))
        evals += 1
        if val > best_val:
            best_tf, best_val = tf, val
    if best_tf is None:
        raise NumericalError("budget exhausted before any valid multiplier ratio was computed")

    # coordinate ascent over a comb around the best single Gaussian
    J = 2
    spacing = 1.5 * best_tf.width
    if evals < budget and _fits_grid(best_tf.width, 0.0, 2 * J * spacing, decay, n_points):
        coeffs = np.zeros(2 * J + 1, dtype=complex)
        coeffs[J] = 1.0
        grid = grid_for(best_tf.center, best_tf.width)
        step = 0.5
        while evals < budget and step > 1e-3:
            improved = False
            for j in range(2 * J + 1):
                for phase in (1.0, 1j, -1.0, -1j):
                    if evals >= budget:
                        break
                    trial = coeffs.copy()
                    trial[j] += step * phase
                    tf = TestFunction(best_tf.center, best_tf.width, tuple(trial), spacing, best_tf.direction)
                    val = multiplier_ratio(sys, p, tf, n_points, grid)
                    evals += 1
                    if val > best_val * (1 + 1e-12):
                        coeffs, best_tf, best_val, improved = trial, tf, val, True
            if not improved:
                step *= 0.5

    # aliasing check: twice the samples over twice the time window
    check = multiplier_ratio(sys, p, best_tf, 2 * n_points, stretch=2.0)
    value = min(best_val, check)
    witness = {
        "center": best_tf.center,
        "width": best_tf.width,
        "coeffs": list(best_tf.coeffs),
        "spacing": best_tf.spacing,
        "direction": list(best_tf.direction),
        "aliasing": abs(check - best_val),
        "evaluations": evals,
    }
    return IoNormEstimate(p, float(value), SEARCH, witness)


# --------------------------------------------------------------------------
# periodic multipliers


def _lattice_witness(sys, xi, ks):
    s = np.asarray(ks, dtype=float) + xi
    return transfer_on_axis(sys, s)


def periodic_ratio(sys: LtiSystem, xi: float, p: float, coeffs: dict, samples: int = 512) -> float:
    """Ratio of ``L^p(0, 2 pi)`` norms for the trigonometric polynomial ``sum_k u_k e^{ikt}``.

    ``coeffs`` maps integer frequencies ``k`` to input vectors ``u_k``; the
    output has coefficients ``C (A - i xi - i k)^{-1} B u_k``.
    """
    ks = sorted(coeffs)
    if not ks:
        raise InputError("empty trigonometric polynomial")
    if ks[-1] - ks[0] >= samples // 2:
        raise InputError("frequency spread exceeds the sampling grid")
    H = _lattice_witness(sys, xi, ks)
    m, k_out = sys.B.shape[1], sys.C.shape[0]
    Fu = np.zeros((samples, m), dtype=complex)
    Fy = np.zeros((samples, k_out), dtype=complex)
    for idx, k in enumerate(ks):
        u = np.asarray(coeffs[k], dtype=complex).reshape(m)
        Fu[(k - ks[0]) % samples] = u
        Fy[(k - ks[0]) % samples] = H[idx] @ u
    gu = np.fft.ifft(Fu, axis=0) * samples
    gy = np.fft.ifft(Fy, axis=0) * samples
    num = _periodic_lp(gy, sys.norm_Y, p)
    den = _periodic_lp(gu, sys.norm_U, p)
    return 0.0 if den == 0.0 else num / den


def _periodic_lp(g, spatial, p):
    mag = vector_norm(g, spatial, axis=1)
    if math.isinf(p):
        return float(mag.max())
    return float(np.mean(mag ** p)) ** (1.0 / p)


def periodic_multiplier_norm(sys: LtiSystem, xi: float = 0.0, p: float = 2.0, budget: int = 400,
                             n_coeffs: int = 21, seed: int = 0) -> IoNormEstimate:
    """Norm of ``C Gamma_per^{-1} B`` on ``2 pi``-periodic ``L^p`` functions.

    For ``p = 2`` with Euclidean ``U`` and ``Y`` Parseval reduces it to the
    lattice supremum ``sup_k ||C (A - i xi - i k)^{-1} B||``.  Otherwise the
    ratio is maximised over trigonometric polynomials with at most
    ``n_coeffs`` terms around the lattice argmax by coordinate ascent, giving a
    lower bound.
    """
    lattice = sup_transfer_integers(sys, xi)
    hilbert = p == 2.0 and sys.norm_U.p == 2.0 and sys.norm_Y.p == 2.0
    if hilbert:
        return IoNormEstimate(p, lattice.value, EXACT_L2, {"k": lattice.argmax, "xi": xi})
    k0 = int(lattice.argmax)
    half = min(n_coeffs, 21) // 2
    ks = list(range(k0 - half, k0 + half + 1))
    H = _lattice_witness(sys, xi, ks)
    dirs = {k: induced_norm_estimate(H[i], sys.norm_U, sys.norm_Y, seed=seed).witness
            for i, k in enumerate(ks)}
    coeffs = {k: np.zeros(sys.B.shape[1], dtype=complex) for k in ks}
    coeffs[k0] = dirs[k0].copy()
    best = periodic_ratio(sys, xi, p, coeffs)
    evals = 1
    step = 0.5
    order = sorted(ks, key=lambda k: (abs(k - k0), k))
    while evals < budget and step > 1e-3:
        improved = False
        for k in order:
            for phase in (1.0, 1j, -1.0, -1j):
                if evals >= budget:
                    break
                trial = dict(coeffs)
                trial[k] = coeffs[k] + step * phase * dirs[k]
                val = periodic_ratio(sys, xi, p, trial)
                evals += 1
                if val > best * (1 + 1e-12):
                    coeffs, best, improved = trial, val, True
        if not improved:
            step *= 0.5
    witness = {"k": k0, "xi": xi, "coeffs": {k: v for k, v in coeffs.items() if np.any(v)},
               "lattice_sup": lattice.value, "evaluations": evals}
    return IoNormEstimate(p, float(max(best, 0.0)), SEARCH, witness)
