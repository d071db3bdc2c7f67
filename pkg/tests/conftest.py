import numpy as np
import pytest
from hypothesis import strategies as st

from formres.geometry import SdsParams


def lambda_max(n, mass=1.0):
    """Largest lam with two horizons (the nondegeneracy bound solved for lam)."""
    return ((n - 3) ** (n - 3) / (n - 1) ** (n - 1) / mass**2) ** (1.0 / (n - 3))


def random_params(rng, n, lo=0.05, hi=0.95):
    mass = float(rng.uniform(0.5, 2.0))
    lam = float(rng.uniform(lo, hi)) * lambda_max(n, mass)
    return SdsParams.from_lambda(n, mass, lam)


@st.composite
def sds_params(draw, dims=(4, 5, 6, 7, 8), lo=0.05, hi=0.95):
    n = draw(st.sampled_from(dims))
    mass = draw(st.floats(0.5, 2.0))
    frac = draw(st.floats(lo, hi))
    return SdsParams.from_lambda(n, mass, frac * lambda_max(n, mass))


@pytest.fixture
def sds4():
    return SdsParams.from_lambda(4, 1.0, 0.01)


@pytest.fixture
def sds5():
    return SdsParams.from_lambda(5, 1.0, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion, print it, and assert."""

    def report(number, title, ok, detail=""):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
