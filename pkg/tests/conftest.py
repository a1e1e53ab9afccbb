import numpy as np
import pytest

from radial_yamabe.closed_forms import HyperbolicFamilyParam, family_u0
from radial_yamabe.geometry import ModelParams, WarpingFunction
from radial_yamabe.ode import OdeConfig, integrate

_CACHE = {}


def family_run(n, b, r_max=15.0):
    """ODE run started at the centre value of the closed-form member u_b (cached)."""
    key = (n, b, r_max)
    if key not in _CACHE:
        params = ModelParams(n)
        _CACHE[key] = integrate(params, WarpingFunction.scaled_hyperbolic(n), family_u0(params, b), OdeConfig(r_max=r_max))
    return _CACHE[key]


@pytest.fixture
def p3():
    return ModelParams(3)


@pytest.fixture
def hyp3():
    return WarpingFunction.scaled_hyperbolic(3)


@pytest.fixture
def family():
    return family_run


@pytest.fixture
def b2n3():
    return HyperbolicFamilyParam(2.0, ModelParams(3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def _report(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
