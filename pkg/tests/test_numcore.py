import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, strategies as st

from stabradius.errors import ConvergenceError, InputError, SpectrumError
from stabradius.numcore import (
    L1,
    L2,
    LINF,
    NormSpec,
    Quadrature,
    batch_induced_norm,
    eigenvalues,
    expm,
    golden_section_max,
    hessenberg,
    induced_norm_estimate,
    induced_norm_upper,
    induced_pnorm,
    integrate_decaying,
    integrate_panels,
    maximize_on_line,
    norming_vector,
    resolvent_apply,
    spectral_abscissa,
    vector_norm,
)

from conftest import FOCUS, NONNORMAL

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(1, 6)


def cmat(seed, n, m=None):
    rng = np.random.default_rng(seed)
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


# -- norms -----------------------------------------------------------------------


class TestNormSpec:
    @pytest.mark.parametrize("text,p", [("l1", 1.0), ("L2", 2.0), ("linf", math.inf), ("inf", math.inf), ("3", 3.0)])
    def test_parse(self, text, p):
        assert NormSpec.parse(text).p == p

    def test_parse_dict_and_number(self):
        assert NormSpec.parse({"p": 1.5}).p == 1.5
        assert NormSpec.parse(4).p == 4.0

    @pytest.mark.parametrize("bad", [0.5, "l7x", {"q": 2}, None, float("nan")])
    def test_rejects(self, bad):
        with pytest.raises(InputError):
            NormSpec.parse(bad)

    def test_dual(self):
        assert L1.dual == LINF and LINF.dual == L1 and L2.dual == L2
        assert NormSpec(3.0).dual.p == pytest.approx(1.5)

    @pytest.mark.parametrize("p", [1.0, 2.0, math.inf, 3.0])
    def test_json_round_trip(self, p):
        assert NormSpec.parse(NormSpec(p).to_json()) == NormSpec(p)


@given(seeds, dims, st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]))
def test_norming_vector_attains_norm(seed, n, p):
    v = cmat(seed, n, 1)[:, 0]
    spec = NormSpec(p)
    w = norming_vector(v, spec)
    assert np.vdot(w, v) == pytest.approx(vector_norm(v, spec), rel=1e-12)
    assert vector_norm(w, spec.dual) == pytest.approx(1.0, rel=1e-12)


def test_norming_vector_zero():
    with pytest.raises(InputError):
        norming_vector(np.zeros(3), L2)


class TestInducedNorm:
    def test_inverse_of_focus_l1(self):
        assert induced_pnorm(np.linalg.inv(FOCUS), L1) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [1.0, 2.0, math.inf, 3.0, 1.5])
    def test_identity(self, p):
        assert induced_pnorm(np.eye(4), NormSpec(p)) == pytest.approx(1.0, rel=1e-12)

    def test_two_norm_matches_power_iteration(self):
        M = cmat(3, 3)
        G = M.conj().T @ M
        x = np.ones(3, dtype=complex)
        for _ in range(2000):
            x = G @ x
            x /= np.linalg.norm(x)
        oracle = math.sqrt(np.vdot(x, G @ x).real)
        assert induced_pnorm(M, L2) == pytest.approx(oracle, abs=1e-10)

    @given(seeds, dims, dims)
    def test_closed_forms(self, seed, n, m):
        M = cmat(seed, n, m)
        assert induced_pnorm(M, L1) == np.abs(M).sum(axis=0).max()
        assert induced_pnorm(M, LINF) == np.abs(M).sum(axis=1).max()
        assert induced_pnorm(M, L2) == pytest.approx(np.linalg.norm(M, 2), rel=1e-12)

    @given(seeds, dims, st.sampled_from([1.0, 2.0, math.inf]))
    def test_witness_attains(self, seed, n, p):
        M, spec = cmat(seed, n), NormSpec(p)
        est = induced_norm_estimate(M, spec)
        ratio = vector_norm(M @ est.witness, spec) / vector_norm(est.witness, spec)
        assert est.exact and ratio == pytest.approx(est.value, rel=1e-10)

    @given(seeds, dims, st.sampled_from([1.0, 2.0, math.inf]))
    def test_norm_axioms(self, seed, n, p):
        spec = NormSpec(p)
        M, N = cmat(seed, n), cmat(seed + 1, n)
        nm, nn = induced_pnorm(M, spec), induced_pnorm(N, spec)
        assert induced_pnorm(M @ N, spec) <= nm * nn * (1 + 1e-12)
        assert induced_pnorm(M + N, spec) <= (nm + nn) * (1 + 1e-12)
        assert induced_pnorm((2 - 3j) * M, spec) == pytest.approx(abs(2 - 3j) * nm, rel=1e-12)

    @given(seeds, st.integers(1, 4), st.sampled_from([(3.0, 3.0), (1.5, 4.0), (2.0, 1.0)]))
    def test_general_p_is_lower_bound(self, seed, n, pq):
        dom, cod = NormSpec(pq[0]), NormSpec(pq[1])
        M = cmat(seed, n)
        est = induced_norm_estimate(M, dom, cod)
        assert not est.exact
        achieved = vector_norm(M @ est.witness, cod) / vector_norm(est.witness, dom)
        assert achieved == pytest.approx(est.value, rel=1e-10)
        assert est.value <= induced_norm_upper(M, dom, cod) * (1 + 1e-12)
        # never below random sampling of the sphere
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 200)) + 1j * rng.normal(size=(n, 200))
        sampled = (vector_norm((M @ X).T, cod) / vector_norm(X.T, dom)).max()
        assert est.value >= sampled * (1 - 1e-9)

    def test_batch_matches_single(self):
        stack = np.stack([cmat(s, 3, 2) for s in range(5)])
        for spec in (L1, L2, LINF, NormSpec(3.0)):
            single = [induced_pnorm(M, spec) for M in stack]
            assert np.allclose(batch_induced_norm(stack, spec, spec), single, rtol=1e-10)

    def test_empty_matrix_rejected(self):
        with pytest.raises(InputError):
            induced_pnorm(np.zeros((0, 2)), L2)

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            induced_pnorm([[1.0, np.nan]], L2)


# -- eigenvalues -----------------------------------------------------------------------


def _sorted(ev):
    ev = np.asarray(ev)
    return ev[np.lexsort((ev.imag, ev.real))]


class TestEigenvalues:
    @pytest.mark.parametrize("A,expected", [
        (FOCUS, [-1 - 1j, -1 + 1j]),
        (np.diag([3.0, -2.0]), [-2, 3]),
        (NONNORMAL, [-1 - 1j, -1 + 1j]),
    ])
    def test_examples(self, A, expected):
        assert np.allclose(_sorted(eigenvalues(A)), _sorted(expected), atol=1e-12)

    @given(seeds, st.integers(1, 12))
    def test_matches_lapack(self, seed, n):
        M = cmat(seed, n)
        ours = eigenvalues(M)
        ref = np.linalg.eigvals(M)
        # each reference eigenvalue matched one-to-one
        d = np.abs(ours[:, None] - ref[None, :])
        r, c = scipy.optimize.linear_sum_assignment(d)
        assert d[r, c].max() <= 1e-9 * max(1.0, np.abs(M).max())

    @given(seeds, st.integers(1, 8))
    def test_residuals(self, seed, n):
        M = cmat(seed, n)
        for lam in eigenvalues(M):
            smin = np.linalg.svd(M - lam * np.eye(n), compute_uv=False)[-1]
            assert smin <= 1e-10 * np.linalg.norm(M, 2)

    def test_dimension_64(self):
        M = cmat(11, 64)
        assert np.allclose(np.sort_complex(eigenvalues(M)), np.sort_complex(np.linalg.eigvals(M)), atol=1e-9)

    def test_cap_and_shape(self):
        with pytest.raises(InputError):
            eigenvalues(np.zeros((2, 3)))
        with pytest.raises(InputError):
            eigenvalues(np.eye(65))

    def test_hessenberg_similarity(self):
        M = cmat(5, 6)
        H = hessenberg(M)
        assert np.array_equal(np.tril(H, -2), np.zeros_like(H))
        assert np.allclose(np.sort_complex(np.linalg.eigvals(H)), np.sort_complex(np.linalg.eigvals(M)), atol=1e-10)
        assert np.linalg.norm(H) == pytest.approx(np.linalg.norm(M), rel=1e-12)

    def test_spectral_abscissa(self):
        assert spectral_abscissa(FOCUS) == pytest.approx(-1.0)


# -- expm ---------------------------------------------------------------------------


class TestExpm:
    def test_focus_closed_form(self):
        c, s = math.cos(1.0), math.sin(1.0)
        assert np.allclose(expm(FOCUS), math.exp(-1) * np.array([[c, s], [-s, c]]), atol=1e-15)

    def test_nonnormal_closed_form(self):
        t = 0.3
        c, s = math.cos(t), math.sin(t)
        closed = math.exp(-t) * np.array([[c + 5.5 * s, -2.5 * s], [12.5 * s, c - 5.5 * s]])
        assert np.abs(expm(NONNORMAL, t) - closed).max() <= 1e-10

    def test_zero_time(self):
        assert np.array_equal(expm(cmat(1, 4), 0.0), np.eye(4))

    @given(seeds, dims, st.floats(0.01, 30.0))
    def test_matches_scipy(self, seed, n, scale):
        M = cmat(seed, n) * scale / math.sqrt(n)
        ref = scipy.linalg.expm(M)
        assert np.abs(expm(M) - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max()) * 10

    @given(seeds, dims, st.floats(0, 2), st.floats(0, 2))
    def test_semigroup(self, seed, n, s, t):
        A = cmat(seed, n) / math.sqrt(n)
        assert np.abs(expm(A, s + t) - expm(A, s) @ expm(A, t)).max() <= 1e-10 * max(1.0, np.abs(expm(A, s + t)).max())

    @given(seeds, dims)
    def test_spectral_mapping(self, seed, n):
        A = cmat(seed, n) / math.sqrt(n)
        lhs = np.linalg.eigvals(expm(A))
        rhs = np.exp(np.linalg.eigvals(A))
        d = np.abs(lhs[:, None] - rhs[None, :])
        r, c = scipy.optimize.linear_sum_assignment(d)
        assert d[r, c].max() <= 1e-8

    def test_batched(self):
        stack = np.stack([cmat(s, 3) for s in range(4)])
        out = expm(stack)
        for M, E in zip(stack, out):
            assert np.allclose(E, scipy.linalg.expm(M), rtol=1e-12, atol=1e-14)

    def test_non_square(self):
        with pytest.raises(InputError):
            expm(np.zeros((2, 3)))


# -- resolvent -------------------------------------------------------------------------


class TestResolvent:
    def test_minus_identity(self):
        assert np.allclose(resolvent_apply(-np.eye(3), 0.0, np.eye(3)), -np.eye(3))

    def test_focus_inverse(self):
        assert np.allclose(resolvent_apply(FOCUS, 0.0, np.eye(2)), 0.5 * np.array([[-1, -1], [1, -1]]), atol=1e-15)

    def test_eigenvalue_rejected(self):
        with pytest.raises(SpectrumError, match="in spectrum"):
            resolvent_apply(FOCUS, -1 + 1j, np.eye(2))

    @given(seeds, dims, st.floats(-5, 5), st.floats(-5, 5))
    def test_residual(self, seed, n, re, im):
        A, V = cmat(seed, n), cmat(seed + 7, n, 2)
        lam = complex(re, im)
        try:
            X = resolvent_apply(A, lam, V)
        except SpectrumError:
            return
        res = np.abs((A - lam * np.eye(n)) @ X - V).max()
        cond = np.linalg.cond(A - lam * np.eye(n))
        assert res <= 1e-12 * np.abs(V).max() * max(1.0, cond)


# -- quadrature ------------------------------------------------------------------------


class TestQuadrature:
    def test_exponential(self):
        assert integrate_decaying(lambda t: np.exp(-t), (1.0, 1.0), Quadrature(1e-10)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
    def test_rates(self, beta):
        val = integrate_decaying(lambda t: np.exp(-beta * t), (1.0, beta), Quadrature(1e-10))
        assert val == pytest.approx(1.0 / beta, abs=1e-10)

    def test_kinked_integrand(self):
        f = lambda t: np.exp(-t) * (np.abs(np.cos(t)) + np.abs(np.sin(t)))
        T = Quadrature(1e-12).horizon(2.0, 1.0)
        kinks = tuple(k * math.pi / 2 for k in range(1, int(T / (math.pi / 2)) + 1))
        val = integrate_decaying(f, (2.0, 1.0), Quadrature(1e-12, kinks=kinks))
        # independent oracle: scipy.quad with the same breakpoints
        oracle = sum(scipy.integrate.quad(lambda t: float(f(np.array([t]))[0]), a, b, epsabs=1e-14)[0]
                     for a, b in zip((0.0,) + kinks, kinks + (80.0,)))
        assert val == pytest.approx(oracle, abs=1e-11)
        assert val == pytest.approx(1.262434309, abs=1e-8)

    def test_nonnormal_column_integral(self):
        f = lambda ts: np.linalg.norm(expm(ts[:, None, None] * NONNORMAL[None]) @ np.array([1.0, 0.0]), axis=-1)
        val = integrate_decaying(f, (40.0, 0.5), Quadrature(1e-10))
        assert val == pytest.approx(7.748310791, abs=1e-7)

    def test_invalid_decay(self):
        with pytest.raises(InputError):
            integrate_decaying(lambda t: np.exp(-t), (1.0, 0.0), Quadrature(1e-10))

    def test_panels_polynomial(self):
        assert integrate_panels(lambda t: t ** 3, [0.0, 1.0, 2.0], 1e-12) == pytest.approx(4.0, abs=1e-12)

    def test_horizon_rule(self):
        q = Quadrature(1e-8)
        T = q.horizon(3.0, 0.5)
        assert 3.0 * math.exp(-0.5 * T) / 0.5 <= 0.5e-8 * (1 + 1e-9)


# -- line search ------------------------------------------------------------------------


def _focus_g(s):
    s = np.asarray(s, dtype=float)
    return (np.sqrt(1 + s ** 2) + 1) / np.sqrt(s ** 4 + 4)


class TestMaximizeOnLine:
    def test_focus_closed_form(self):
        res = maximize_on_line(_focus_g, 3.0, lambda S: 2.0 / S, tol=1e-10, lipschitz=2.0)
        assert res.value == pytest.approx(1.087494476, abs=1e-9)
        assert 0.8 < abs(res.argmax) < 0.95
        assert res.value >= res.samples.max()

    def test_lorentzian(self):
        res = maximize_on_line(lambda s: 1 / (1 + np.asarray(s) ** 2), 5.0, lambda S: 1 / (1 + S ** 2), tol=1e-10)
        assert res.argmax == pytest.approx(0.0, abs=1e-6) and res.value == pytest.approx(1.0, abs=1e-12)

    def test_nonnormal_resolvent(self):
        def g(s):
            s = np.atleast_1d(s)
            return np.linalg.norm(np.linalg.inv(NONNORMAL[None] - 1j * s[:, None, None] * np.eye(2)), 2, axis=(1, 2))
        res = maximize_on_line(g, 30.0, lambda S: 1.0 / (S - 20.0) if S > 20 else math.inf, tol=1e-10, lipschitz=200.0)
        grid = np.linspace(-30, 30, 600_001)
        assert res.value >= g(grid).max() - 1e-10
        assert res.value == pytest.approx(7.5, abs=1e-8)

    def test_grid_doubling_stable(self):
        a = maximize_on_line(_focus_g, 3.0, lambda S: 2.0 / S, tol=1e-9, lipschitz=2.0)
        b = maximize_on_line(_focus_g, 3.0, lambda S: 2.0 / S, tol=1e-9, lipschitz=4.0)
        assert abs(a.value - b.value) <= 1e-9

    def test_envelope_never_dominated(self):
        with pytest.raises(ConvergenceError):
            maximize_on_line(lambda s: np.zeros_like(np.asarray(s, dtype=float)), 1.0, lambda S: 1.0,
                             tol=1e-9, max_expansions=3)

    def test_golden_section(self):
        x, v = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
        assert x == pytest.approx(0.3, abs=1e-6) and v == pytest.approx(0.0, abs=1e-12)
