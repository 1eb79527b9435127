"""Nonautonomous systems ``x' = A(t) x + B(t) u``, ``y = C(t) x``.

Propagators are built from the exponential midpoint rule on the global lattice
``k h``: the step over ``[a, b]`` is ``exp((b - a) A((a + b) / 2))`` and
``U(t, tau)`` is the ordered product of steps from ``tau`` to ``t`` (with
fractional first/last steps).  Lattice step matrices are cached per family.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .numcore import L2, NormSpec, as_matrix, as_square, expm, vector_norm
from .transfer import LtiSystem

DEFAULT_STEP = 1e-3


def _vectorize(fn, n_rows, n_cols):
    """Wrap a scalar-time matrix function so it accepts arrays of times."""

    def batch(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.empty((len(ts), n_rows, n_cols), dtype=complex)
        for i, t in enumerate(ts):
            out[i] = fn(float(t))
        return out

    return batch


class EvolutionFamily:
    """Propagators ``U(t, tau)`` of ``x' = A(t) x``.

    ``generator`` maps an array of times of shape ``(N,)`` to matrices of shape
    ``(N, n, n)``; use :meth:`from_callable` for a scalar-time function.
    """

    def __init__(self, generator: Callable, dim: int, step: float = DEFAULT_STEP,
                 name: str = "custom", params: Optional[dict] = None):
        if step <= 0:
            raise InputError(f"step must be positive, got {step}")
        self.generator = generator
        self.dim = int(dim)
        self.step = float(step)
        self.name = name
        self.params = params or {}
        self._steps = np.empty((0, self.dim, self.dim), dtype=complex)
        self._lock = threading.Lock()

    @classmethod
    def from_callable(cls, fn: Callable[[float], np.ndarray], dim: int, **kwargs) -> "EvolutionFamily":
        return cls(_vectorize(fn, dim, dim), dim, **kwargs)

    def with_step(self, step: float) -> "EvolutionFamily":
        return EvolutionFamily(self.generator, self.dim, step, self.name, self.params)

    def A(self, t) -> np.ndarray:
        """Generator sampled at ``t`` (scalar -> matrix, array -> stack)."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self.generator(ts), dtype=complex)
        return out[0] if np.ndim(t) == 0 else out

    # -- lattice steps -------------------------------------------------------

    def _ensure_steps(self, k_end: int) -> None:
        if k_end <= len(self._steps):
            return
        with self._lock:
            k0 = len(self._steps)
            if k_end <= k0:
                return
            k_end = max(k_end, int(1.25 * k0) + 64)
            mids = (np.arange(k0, k_end) + 0.5) * self.step
            new = expm(self.step * self.A(mids))
            self._steps = np.concatenate([self._steps, new])

    def _step(self, a: float, b: float) -> np.ndarray:
        return expm((b - a) * self.A(0.5 * (a + b)))

    def _lattice(self, tau: float, t: float):
        """Breakpoints from ``tau`` to ``t``: ``tau``, interior lattice points, ``t``."""
        h = self.step
        k_lo = math.floor(tau / h + 1e-9) + 1
        k_hi = math.ceil(t / h - 1e-9) - 1
        if abs(tau - round(tau / h) * h) <= 1e-9 * h:
            k_lo = round(tau / h) + 1
        interior = np.arange(k_lo, k_hi + 1) * h if k_hi >= k_lo else np.empty(0)
        return k_lo, k_hi, interior

    def step_sequence(self, tau: float, t: float):
        """``(times, steps)``: breakpoints ``tau = t_0 < ... < t_K = t`` and step matrices."""
        if t < tau:
            raise InputError(f"propagate needs t >= tau, got t={t}, tau={tau}")
        if t == tau:
            return np.array([tau]), np.empty((0, self.dim, self.dim), dtype=complex)
        k_lo, k_hi, interior = self._lattice(tau, t)
        if len(interior) == 0:
            return np.array([tau, t]), self._step(tau, t)[None]
        self._ensure_steps(k_hi)
        full = self._steps[k_lo:k_hi]  # steps [k h, (k+1) h] for k_lo <= k < k_hi
        first = self._step(tau, interior[0])
        last = self._step(interior[-1], t)
        pieces = []
        if interior[0] - tau > 1e-12 * self.step:
            pieces.append(first[None])
        pieces.append(full)
        if t - interior[-1] > 1e-12 * self.step:
            pieces.append(last[None])
        times = [tau] if interior[0] - tau > 1e-12 * self.step else []
        times += list(interior)
        if t - interior[-1] > 1e-12 * self.step:
            times.append(t)
        return np.array(times), np.concatenate(pieces)

    def propagate(self, t: float, tau: float) -> np.ndarray:
        """``U(t, tau)`` for ``t >= tau``."""
        _, steps = self.step_sequence(tau, t)
        U = np.eye(self.dim, dtype=complex)
        for S in steps:
            U = S @ U
        return U

    def propagate_richardson(self, t: float, tau: float):
        """Extrapolated ``(4 U_{h/2} - U_h) / 3`` and the step-halving difference ``||U_{h/2} - U_h||``."""
        U_h = self.propagate(t, tau)
        U_half = self.with_step(self.step / 2).propagate(t, tau)
        return (4.0 * U_half - U_h) / 3.0, float(np.linalg.norm(U_half - U_h, 2))

    def trajectory(self, tau: float, t: float, X) -> tuple:
        """States ``U(t_j, tau) X`` at every breakpoint ``t_j`` between ``tau`` and ``t``."""
        times, steps = self.step_sequence(tau, t)
        X = np.asarray(X, dtype=complex)
        out = np.empty((len(times),) + X.shape, dtype=complex)
        out[0] = X
        for j, S in enumerate(steps):
            out[j + 1] = S @ out[j]
        return times, out

    def exponential_bound(self, horizon: float, samples: int = 200):
        """``(M, omega)`` with ``||U(t, 0)|| <= M e^{omega t}`` on the sampled lattice.

        ``omega`` is the least-squares slope of ``log ||U(t, 0)||``; ``M`` is the
        smallest constant making the bound hold at every sample.
        """
        times, states = self.trajectory(0.0, horizon, np.eye(self.dim))
        idx = np.unique(np.linspace(0, len(times) - 1, samples).astype(int))
        ts = times[idx]
        norms = np.array([np.linalg.norm(states[i], 2) for i in idx])
        logs = np.log(np.maximum(norms, 1e-300))
        omega = float(np.polyfit(ts, logs, 1)[0]) if len(ts) > 1 else 0.0
        M = float(np.max(norms * np.exp(-omega * ts)))
        return M, omega


# -- built-in generators -------------------------------------------------------


def constant(A, step: float = DEFAULT_STEP) -> EvolutionFamily:
    A = as_square(A, "A")

    def gen(ts):
        return np.broadcast_to(A, (len(ts),) + A.shape)

    return EvolutionFamily(gen, A.shape[0], step, "constant", {"A": A})


def rotating(A0, omega: float = 1.0, step: float = DEFAULT_STEP) -> EvolutionFamily:
    """``A(t) = P(t) A0 P(t)^T`` with ``P(t)`` the plane rotation by angle ``omega t``.

    Frozen spectra equal ``sigma(A0)`` for all ``t``, yet
    ``U(t, 0) = P(t) exp(t (A0 - omega J))`` with ``J = [[0, -1], [1, 0]]``.
    """
    A0 = as_square(A0, "A0")
    if A0.shape != (2, 2):
        raise InputError("rotating family is defined for 2x2 matrices")

    def gen(ts):
        c, s = np.cos(omega * ts), np.sin(omega * ts)
        P = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        return P @ A0 @ np.swapaxes(P, -1, -2)

    return EvolutionFamily(gen, 2, step, "rotating", {"A0": A0, "omega": omega})


def hale(a: float = 1.5, step: float = DEFAULT_STEP) -> EvolutionFamily:
    """``A(t) = [[-1 + a cos^2 t, 1 - a sin t cos t], [-1 - a sin t cos t, -1 + a sin^2 t]]``.

    Frozen eigenvalues have real part ``(a - 2) / 4`` for every ``t`` while
    ``x(t) = e^{(a-1) t} (cos t, -sin t)`` solves the system.
    """

    def gen(ts):
        c, s = np.cos(ts), np.sin(ts)
        out = np.empty((len(ts), 2, 2))
        out[:, 0, 0] = -1 + a * c * c
        out[:, 0, 1] = 1 - a * s * c
        out[:, 1, 0] = -1 - a * s * c
        out[:, 1, 1] = -1 + a * s * s
        return out

    return EvolutionFamily(gen, 2, step, "hale", {"a": a})


def tabulated(times, matrices, step: float = DEFAULT_STEP) -> EvolutionFamily:
    """Piecewise-linear interpolation of samples ``(t_i, A_i)``, constant beyond the ends."""
    times = np.asarray(times, dtype=float)
    mats = np.asarray(matrices, dtype=complex)
    if times.ndim != 1 or len(times) < 1 or mats.shape[0] != len(times):
        raise InputError("tabulated generator needs one matrix per sample time")
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise InputError(f"tabulated matrices must be square, got shape {mats.shape[1:]}")
    if np.any(np.diff(times) <= 0):
        raise InputError("tabulated sample times must be strictly increasing")
    n = mats.shape[1]

    def gen(ts):
        ts = np.clip(ts, times[0], times[-1])
        if len(times) == 1:
            return np.broadcast_to(mats[0], (len(ts), n, n))
        i = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
        w = (ts - times[i]) / (times[i + 1] - times[i])
        return (1 - w)[:, None, None] * mats[i] + w[:, None, None] * mats[i + 1]

    return EvolutionFamily(gen, n, step, "tabulated", {"times": times, "matrices": mats})


# -- systems -------------------------------------------------------------------


def _matrix_map(M, rows: Optional[int], cols: Optional[int], name: str):
    """Constant matrix or callable ``t -> matrix`` as a vectorised map."""
    if callable(M):
        sample = as_matrix(M(0.0), name)
        return _vectorize(M, *sample.shape), sample.shape
    M = as_matrix(M, name)
    return (lambda ts: np.broadcast_to(M, (len(np.atleast_1d(ts)),) + M.shape)), M.shape


@dataclass
class TimeVaryingSystem:
    family: EvolutionFamily
    B: object = None
    C: object = None
    norm_X: NormSpec = L2
    norm_U: NormSpec = L2
    norm_Y: NormSpec = L2
    _B: Callable = field(init=False, repr=False)
    _C: Callable = field(init=False, repr=False)

    def __post_init__(self):
        n = self.family.dim
        self.B = np.eye(n) if self.B is None else self.B
        self.C = np.eye(n) if self.C is None else self.C
        self._B, bshape = _matrix_map(self.B, n, None, "B")
        self._C, cshape = _matrix_map(self.C, None, n, "C")
        if bshape[0] != n or cshape[1] != n:
            raise InputError(f"B must have {n} rows and C {n} columns, got {bshape} and {cshape}")
        self.norm_X, self.norm_U, self.norm_Y = (NormSpec.parse(v) for v in (self.norm_X, self.norm_U, self.norm_Y))

    @classmethod
    def from_lti(cls, sys: LtiSystem, step: float = DEFAULT_STEP) -> "TimeVaryingSystem":
        return cls(constant(sys.A, step), sys.B, sys.C, sys.norm_X, sys.norm_U, sys.norm_Y)

    def B_at(self, t) -> np.ndarray:
        out = self._B(np.atleast_1d(t))
        return out[0] if np.ndim(t) == 0 else out

    def C_at(self, t) -> np.ndarray:
        out = self._C(np.atleast_1d(t))
        return out[0] if np.ndim(t) == 0 else out

    def bounds(self, horizon: float = 100.0, samples: int = 1001):
        """Sampled ``(sup ||B(t)||_2, sup ||C(t)||_2)`` over ``[0, horizon]``."""
        ts = np.linspace(0.0, horizon, samples)
        return (float(np.linalg.norm(self._B(ts), 2, axis=(1, 2)).max()),
                float(np.linalg.norm(self._C(ts), 2, axis=(1, 2)).max()))


def propagate(family: EvolutionFamily, t: float, tau: float) -> np.ndarray:
    return family.propagate(t, tau)


def cocycle_defect(family: EvolutionFamily, tau: float, s: float, t: float) -> float:
    """``||U(t, tau) - U(t, s) U(s, tau)||_2``."""
    return float(np.linalg.norm(family.propagate(t, tau) - family.propagate(t, s) @ family.propagate(s, tau), 2))


# -- Datko test ------------------------------------------------------------------


@dataclass(frozen=True)
class DatkoResult:
    sup_integral: float
    verdict: str
    growth_exponent: float
    probes: list


def _trapezoid_running(times, vals):
    inc = 0.5 * (vals[1:] + vals[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(inc)])


def datko_test(sys: TimeVaryingSystem, p: float = 1.0, horizon: float = 40.0, taus=None,
               n_random: int = 2, seed: int = 0, saturation: float = 1e-6,
               growth_ratio: float = 2.5) -> DatkoResult:
    """Finite-horizon Datko test ``sup_{tau, x} int_tau^{tau+T} ||U(t, tau) x||^p dt``.

    Probes: every basis vector and ``n_random`` seeded random unit vectors, from
    each initial time in ``taus`` (default ``0, T/4, T/2``).  Verdict

    * ``stable`` when every running integral has saturated: the increment over
      the last quarter horizon is below ``saturation`` times the total;
    * ``unstable`` when some probe grows super-linearly: ``I(T) > growth_ratio * I(T/2)``;
    * ``inconclusive`` otherwise.
    """
    if not 1.0 <= p < math.inf:
        raise InputError(f"Datko exponent must lie in [1, inf), got {p}")
    if horizon <= 0:
        raise InputError(f"horizon must be positive, got {horizon}")
    fam = sys.family
    n = fam.dim
    h = fam.step
    if taus is None:
        taus = [0.0, horizon / 4, horizon / 2]
    taus = [round(float(t) / h) * h for t in taus]
    rng = np.random.default_rng(seed)
    X = [np.eye(n, dtype=complex)[:, j] for j in range(n)]
    for _ in range(n_random):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        X.append(v)
    X = np.stack([x / vector_norm(x, sys.norm_X) for x in X], axis=1)

    probes = []
    all_saturated = True
    any_growth = False
    growth = -math.inf
    for tau in taus:
        with np.errstate(over="ignore", invalid="ignore"):
            times, states = fam.trajectory(tau, tau + horizon, X)
            norms = vector_norm(np.swapaxes(states, 1, 2), sys.norm_X)  # (K, probes)
        rel = times - tau
        i_half = np.searchsorted(rel, horizon / 2)
        i_q3 = np.searchsorted(rel, 0.75 * horizon)
        late = rel >= horizon / 2
        for j in range(X.shape[1]):
            col = norms[:, j]
            finite = np.isfinite(col) & (col < 1e100)
            use = late & finite
            if use.sum() >= 2:
                slope = float(np.polyfit(rel[use], np.log(np.maximum(col[use], 1e-300)), 1)[0])
            else:
                slope = math.inf
            if finite.all():
                running = _trapezoid_running(rel, col ** p)
                total = float(running[-1])
                saturated = total - running[i_q3] <= saturation * total
                grows = total > growth_ratio * running[i_half]
            else:
                # the response outgrows floating point within the horizon
                total, saturated, grows = math.inf, False, True
            growth = max(growth, slope)
            all_saturated &= bool(saturated)
            any_growth |= bool(grows)
            probes.append({"tau": tau, "probe": j, "integral": total,
                           "saturated": bool(saturated), "superlinear": bool(grows),
                           "growth_exponent": slope})
    sup_integral = max(pr["integral"] for pr in probes)
    if any_growth:
        verdict = "unstable"
    elif all_saturated:
        verdict = "stable"
    else:
        verdict = "inconclusive"
    return DatkoResult(float(sup_integral), verdict, float(growth), probes)


# -- perturbations ------------------------------------------------------------------


def perturbed_family(sys: TimeVaryingSystem, delta, check_horizon: float = 100.0) -> EvolutionFamily:
    """Family generated by ``A(t) + B(t) Delta(t) C(t)``."""
    fam = sys.family
    m, k = sys.B_at(0.0).shape[1], sys.C_at(0.0).shape[0]
    delta_map, shape = _matrix_map(delta, m, k, "Delta")
    if shape != (m, k):
        raise InputError(f"Delta must be {m}x{k}, got {shape}")
    samples = delta_map(np.linspace(0.0, check_horizon, 1001))
    if not np.all(np.isfinite(samples)) or np.abs(samples).max() > 1e12:
        raise InputError("Delta samples are unbounded")

    def gen(ts):
        return fam.generator(ts) + sys._B(ts) @ delta_map(ts) @ sys._C(ts)

    return EvolutionFamily(gen, fam.dim, fam.step, f"{fam.name}+perturbation", {"base": fam.name})


def _backward_products(steps, dim):
    """``W_j = S_{K-1} ... S_j`` (``W_K = I``) for breakpoint indices ``j = 0..K``."""
    K = len(steps)
    W = np.empty((K + 1, dim, dim), dtype=complex)
    W[K] = np.eye(dim)
    for j in range(K - 1, -1, -1):
        W[j] = W[j + 1] @ steps[j]
    return W


def mild_solution_residual(sys: TimeVaryingSystem, delta, t: float, x) -> float:
    """Residual of the variation-of-parameters identity for the perturbed family.

    ``|| U1(t,0)x - U(t,0)x - int_0^t U(t,r) B(r) Delta(r) C(r) U1(r,0)x dr ||``
    with the integral by the trapezoidal rule on the propagation lattice.
    """
    fam = sys.family
    fam1 = perturbed_family(sys, delta)
    m, k = sys.B_at(0.0).shape[1], sys.C_at(0.0).shape[0]
    delta_map, _ = _matrix_map(delta, m, k, "Delta")
    x = np.asarray(x, dtype=complex)
    times, steps = fam.step_sequence(0.0, t)
    times1, traj1 = fam1.trajectory(0.0, t, x)
    W = _backward_products(steps, fam.dim)
    forcing = sys._B(times) @ delta_map(times) @ sys._C(times) @ traj1[..., None]
    integrand = (W @ forcing)[..., 0]
    dt = np.diff(times)
    integral = (0.5 * (integrand[1:] + integrand[:-1]) * dt[:, None]).sum(axis=0)
    free = W[0] @ x
    return float(np.linalg.norm(traj1[-1] - free - integral))


def nonaut_freq_response(sys: TimeVaryingSystem, omega: float, u0, t: float) -> np.ndarray:
    """``int_0^t C(t) U(t, r) B(r) u0 e^{-i omega (t - r)} dr`` (trapezoidal on the lattice)."""
    if t < 0:
        raise InputError(f"t must be non-negative, got {t}")
    fam = sys.family
    u0 = np.asarray(u0, dtype=complex)
    k = sys.C_at(0.0).shape[0]
    if t == 0:
        return np.zeros(k, dtype=complex)
    times, steps = fam.step_sequence(0.0, t)
    W = _backward_products(steps, fam.dim)
    vals = (W @ (sys._B(times) @ u0)[..., None])[..., 0] * np.exp(-1j * omega * (t - times))[:, None]
    dt = np.diff(times)
    integral = (0.5 * (vals[1:] + vals[:-1]) * dt[:, None]).sum(axis=0)
    return sys.C_at(t) @ integral


def io_norm_l1_tv(sys: TimeVaryingSystem, horizon: float = 40.0, taus=None) -> float:
    """``max_{tau, j} int_tau^{tau+T} ||C(t) U(t, tau) B(tau) e_j||_Y dt`` over a grid of ``tau``.

    With an l1 input norm and ``T -> inf`` this is the norm of the input-output
    operator on ``L^1``; at finite horizon it is a lower bound.
    """
    if horizon <= 0:
        raise InputError(f"horizon must be positive, got {horizon}")
    fam = sys.family
    h = fam.step
    if taus is None:
        taus = [0.0, horizon / 4, horizon / 2]
    best = 0.0
    for tau in (round(float(t) / h) * h for t in taus):
        times, states = fam.trajectory(tau, tau + horizon, sys.B_at(tau))
        Y = sys._C(times) @ states  # (K, k, m)
        norms = vector_norm(np.swapaxes(Y, 1, 2), sys.norm_Y)  # (K, m)
        for j in range(norms.shape[1]):
            best = max(best, float(_trapezoid_running(times - tau, norms[:, j])[-1]))
    return best
