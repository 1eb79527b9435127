import math
import threading

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, strategies as st

from stabradius.errors import InputError
from stabradius.ionorm import io_norm_l1
from stabradius.nonaut import (
    EvolutionFamily,
    TimeVaryingSystem,
    cocycle_defect,
    constant,
    datko_test,
    hale,
    io_norm_l1_tv,
    mild_solution_residual,
    nonaut_freq_response,
    perturbed_family,
    propagate,
    rotating,
    tabulated,
)
from stabradius.radius import radius_bounds
from stabradius.transfer import LtiSystem, spectral_summary

from conftest import FOCUS

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def hale_exact(a, t):
    return math.exp((a - 1) * t) * np.array([math.cos(t), -math.sin(t)])


class TestPropagate:
    def test_constant_matches_expm(self):
        U = propagate(constant(FOCUS), 1.0, 0.0)
        assert np.abs(U - scipy.linalg.expm(FOCUS)).max() <= 1e-10

    def test_constant_richardson(self):
        U, diff = constant(FOCUS).propagate_richardson(2.5, 0.3)
        assert np.abs(U - scipy.linalg.expm(2.2 * FOCUS)).max() <= 1e-10 and diff <= 1e-10

    @pytest.mark.parametrize("k", [1, 2])
    def test_hale(self, k):
        x = propagate(hale(1.5), 2 * math.pi * k, 0.0) @ np.array([1.0, 0.0])
        assert np.linalg.norm(x - [math.exp(math.pi * k), 0.0]) <= 5e-3 * math.exp(math.pi * k)

    @given(st.floats(0.0, 6.0))
    def test_hale_trajectory(self, t):
        x = propagate(hale(1.5), t, 0.0) @ np.array([1.0, 0.0])
        assert np.linalg.norm(x - hale_exact(1.5, t)) <= 1e-5 * max(1.0, math.exp(0.5 * t))

    def test_identity_at_equal_times(self):
        for fam in (hale(1.5), constant(FOCUS)):
            assert np.array_equal(propagate(fam, 1.234, 1.234), np.eye(2))

    def test_backwards_rejected(self):
        with pytest.raises(InputError):
            propagate(hale(), 0.5, 1.0)

    def test_rotating_closed_form(self):
        A0, w, t = np.array([[-0.3, 2.0], [0.1, -1.0]]), 0.7, 2.3
        c, s = math.cos(w * t), math.sin(w * t)
        P = np.array([[c, -s], [s, c]])
        exact = P @ scipy.linalg.expm(t * (A0 - w * J))
        assert np.abs(propagate(rotating(A0, w), t, 0.0) - exact).max() <= 1e-6

    def test_hale_is_rotating(self):
        ts = np.linspace(0, 7, 31)
        a = 1.5
        assert np.allclose(hale(a).A(ts), rotating([[a - 1, 1], [-1, -1]], -1.0).A(ts), atol=1e-15)

    def test_frozen_spectrum_constant(self):
        ts = np.linspace(0.0, 2 * math.pi, 97)
        re = np.linalg.eigvals(hale(1.5).A(ts)).real
        assert np.abs(re + 0.25).max() <= 1e-10

    def test_tabulated_interpolation(self):
        fam = tabulated([0.0, 1.0], [np.zeros((1, 1)), -2 * np.ones((1, 1))])
        # A(t) = -2t on [0, 1], so U(1, 0) = exp(-1)
        assert propagate(fam, 1.0, 0.0)[0, 0] == pytest.approx(math.exp(-1.0), rel=1e-7)
        assert fam.A(5.0)[0, 0] == -2.0

    def test_tabulated_validation(self):
        with pytest.raises(InputError):
            tabulated([0.0, 0.0], [np.eye(2), np.eye(2)])
        with pytest.raises(InputError):
            tabulated([0.0], [np.eye(2), np.eye(2)])

    def test_from_callable(self):
        fam = EvolutionFamily.from_callable(lambda t: np.array([[-1.0 - t]]), 1)
        assert propagate(fam, 1.0, 0.0)[0, 0] == pytest.approx(math.exp(-1.5), rel=1e-7)

    def test_concurrent_cache(self):
        fam = hale(1.5)
        out = [None] * 4

        def work(i):
            out[i] = fam.propagate(3.0 + i, 0.0)

        threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        fresh = hale(1.5)
        for i in range(4):
            assert np.array_equal(out[i], fresh.propagate(3.0 + i, 0.0))

    def test_exponential_bound(self):
        fam = hale(1.5)
        M, omega = fam.exponential_bound(10.0)
        assert omega == pytest.approx(0.5, abs=0.05)
        for t in (1.0, 4.0, 9.0):
            assert np.linalg.norm(fam.propagate(t, 0.0), 2) <= M * math.exp(omega * t) * (1 + 1e-2)


class TestCocycle:
    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_within_step_tolerance(self, a, b, c):
        tau, s, t = sorted((a, b, c))
        fam = hale(1.5)
        assert cocycle_defect(fam, tau, s, t) <= 10 * fam.step ** 2

    def test_on_lattice_exact(self):
        fam = hale(1.5)
        assert cocycle_defect(fam, 0.0, 1.2, 3.6) <= 1e-12


class TestDatko:
    def test_scalar(self):
        res = datko_test(TimeVaryingSystem(constant([[-1.0]])), 1.0, 40.0)
        assert res.verdict == "stable" and res.sup_integral == pytest.approx(1.0, abs=1e-6)

    def test_hale_unstable(self):
        res = datko_test(TimeVaryingSystem(hale(1.5)), 2.0, 40.0)
        assert res.verdict == "unstable"
        assert res.growth_exponent == pytest.approx(0.5, abs=1e-3)

    def test_focus_matches_io_norm(self):
        tv = TimeVaryingSystem(constant(FOCUS), norm_X="l1", norm_U="l1", norm_Y="l1")
        res = datko_test(tv, 1.0, 40.0)
        assert res.verdict == "stable"
        assert res.sup_integral == pytest.approx(io_norm_l1(LtiSystem.unstructured(FOCUS, "l1")).value, rel=1e-6)

    @pytest.mark.parametrize("p,T", [(0.5, 1.0), (math.inf, 1.0), (1.0, 0.0), (2.0, -1.0)])
    def test_invalid(self, p, T):
        with pytest.raises(InputError):
            datko_test(TimeVaryingSystem(hale()), p, T)

    @pytest.mark.parametrize("seed", range(4))
    def test_stable_verdict_implies_negative_abscissa(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(3, 3))
        res = datko_test(TimeVaryingSystem(constant(A, step=0.01)), 1.0, 200.0)
        if res.verdict == "stable":
            assert spectral_summary(A).abscissa < 0


class TestPerturbed:
    def test_zero_delta(self):
        tv = TimeVaryingSystem(hale(1.5))
        fam = perturbed_family(tv, np.zeros((2, 2)))
        assert np.array_equal(fam.propagate(2.0, 0.3), tv.family.propagate(2.0, 0.3))

    def test_constant_delta(self):
        D = np.array([[0.1, 0.2], [0.0, -0.3]])
        fam = perturbed_family(TimeVaryingSystem(constant(FOCUS)), D)
        assert np.abs(fam.propagate(2.0, 0.0) - scipy.linalg.expm(2.0 * (FOCUS + D))).max() <= 1e-10

    def test_unbounded_rejected(self):
        with pytest.raises(InputError):
            perturbed_family(TimeVaryingSystem(hale()), lambda t: np.exp(t) * np.eye(2))

    @pytest.mark.parametrize("fam", [constant(FOCUS), hale(1.5)])
    def test_mild_residual(self, fam):
        tv = TimeVaryingSystem(fam)
        delta = lambda t: np.array([[0.2 * math.sin(t), 0.1], [-0.1, 0.3]])
        assert mild_solution_residual(tv, delta, 2.0, [1.0, 0.5]) <= 100 * fam.step ** 2

    def test_destabilizer_flips_datko(self):
        lti = LtiSystem.unstructured(FOCUS, "l1")
        D = radius_bounds(lti, 1).destabilizer.delta
        tv = TimeVaryingSystem.from_lti(lti, step=0.01)
        at_radius = datko_test(TimeVaryingSystem(perturbed_family(tv, D), norm_X="l1"), 1.0, 500.0)
        assert at_radius.verdict in ("unstable", "inconclusive")
        inside = datko_test(TimeVaryingSystem(perturbed_family(tv, 0.9 * D), norm_X="l1"), 1.0, 500.0)
        assert inside.verdict == "stable"

    @pytest.mark.parametrize("seed", range(3))
    def test_robust_below_radius(self, seed):
        lti = LtiSystem.unstructured(FOCUS, "l1")
        exact = radius_bounds(lti, 1, with_destabilizer=False).exact
        rng = np.random.default_rng(seed)
        D = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        D *= 0.9 * exact / np.abs(D).sum(axis=0).max()
        tv = TimeVaryingSystem.from_lti(lti, step=0.01)
        assert datko_test(TimeVaryingSystem(perturbed_family(tv, D), norm_X="l1"), 1.0, 500.0).verdict == "stable"


class TestFrequencyResponse:
    @pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
    def test_identity(self, t):
        tv = TimeVaryingSystem(constant(-np.eye(2)))
        y = nonaut_freq_response(tv, 0.0, [1.0, 0.0], t)
        assert np.abs(y - [1 - math.exp(-t), 0.0]).max() <= 1e-6

    def test_zero_input_operator(self):
        tv = TimeVaryingSystem(hale(), B=np.zeros((2, 1)))
        assert np.array_equal(nonaut_freq_response(tv, 1.0, [1.0], 3.0), np.zeros(2))

    @pytest.mark.parametrize("omega", [0.0, 1.0, -2.5])
    def test_resolvent_identity(self, omega):
        A, B, C = FOCUS, np.array([[1.0], [2.0]]), np.array([[1.0, -1.0]])
        tv = TimeVaryingSystem(constant(A), B, C)
        u0 = np.array([1.0])
        x0 = np.linalg.solve(1j * omega * np.eye(2) - A, B @ u0)
        for t in (0.7, 3.0, 20.0):
            expected = C @ x0 - C @ scipy.linalg.expm(t * A) @ x0 * np.exp(-1j * omega * t)
            assert np.abs(nonaut_freq_response(tv, omega, u0, t) - expected).max() <= 1e-6

    def test_time_varying_against_ode(self):
        tv = TimeVaryingSystem(hale(0.5), B=np.array([[1.0], [0.0]]))
        omega, t = 1.3, 2.0
        rhs = lambda r, x: (hale(0.5).A(r) @ x + np.array([1.0, 0.0]) * np.exp(1j * omega * r))
        sol = scipy.integrate.solve_ivp(rhs, (0, t), np.zeros(2, dtype=complex), rtol=1e-11, atol=1e-12)
        expected = sol.y[:, -1] * np.exp(-1j * omega * t)
        assert np.abs(nonaut_freq_response(tv, omega, [1.0], t) - expected).max() <= 1e-5

    def test_negative_time(self):
        with pytest.raises(InputError):
            nonaut_freq_response(TimeVaryingSystem(hale()), 0.0, [1.0, 0.0], -1.0)


class TestTimeVaryingSystem:
    def test_bounds(self):
        tv = TimeVaryingSystem(hale(), B=lambda t: np.array([[math.cos(t)], [0.0]]))
        b, c = tv.bounds()
        assert b == pytest.approx(1.0, abs=1e-6) and c == pytest.approx(1.0)

    def test_shape_check(self):
        with pytest.raises(InputError):
            TimeVaryingSystem(hale(), B=np.eye(3))

    def test_io_norm_l1_tv(self):
        tv = TimeVaryingSystem(constant(FOCUS), norm_X="l1", norm_U="l1", norm_Y="l1")
        assert io_norm_l1_tv(tv) == pytest.approx(1.262434309, rel=1e-6)
