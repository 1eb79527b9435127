import numpy as np
import pytest
from hypothesis import settings

from stabradius.transfer import LtiSystem

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("default")

FOCUS = np.array([[-1.0, 1.0], [-1.0, -1.0]])
NONNORMAL = np.array([[4.5, -2.5], [12.5, -6.5]])


@pytest.fixture
def focus_l1():
    return LtiSystem.unstructured(FOCUS, "l1")


@pytest.fixture
def nonnormal_l2():
    return LtiSystem.unstructured(NONNORMAL, "l2")


def random_stable_system(rng, n_max=5, gap=0.5, norm="l2"):
    """Random complex system with spectral abscissa <= -gap."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, n + 1))
    k = int(rng.integers(1, n + 1))
    g = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    A = g(n, n)
    A = A - (np.linalg.eigvals(A).real.max() + gap + rng.random()) * np.eye(n)
    return LtiSystem(A, g(n, m), g(k, n), norm, norm, norm)


# acceptance gate: one line per criterion, printed after the run
GATE = {}


@pytest.fixture
def gate():
    def record(name, ok, detail=""):
        prev_ok, prev_detail = GATE.get(name, (True, ""))
        GATE[name] = (prev_ok and bool(ok), "; ".join(x for x in (prev_detail, detail) if x))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not GATE:
        return
    terminalreporter.section("acceptance gate")
    for name in sorted(GATE, key=lambda k: int(k[2:])):
        ok, detail = GATE[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
