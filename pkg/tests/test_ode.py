import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from radial_yamabe.closed_forms import HyperbolicFamilyParam, family_u0, hyperbolic_family_radial
from radial_yamabe.errors import ConfigError, DomainError, RangeError
from radial_yamabe.geometry import ModelParams, WarpingFunction
from radial_yamabe.ode import (
    OdeConfig,
    RadialSolution,
    Termination,
    integrate,
    output_grid,
    series_start,
    solution_at,
)


def scipy_reference(params, w, u0, r_eps, r_eval):
    """Independent reference: scipy's DOP853 from the same series start."""
    s = series_start(params, u0, r_eps)

    def rhs(r, y):
        return [y[1], params.c_n * (y[0] ** params.p - y[0]) - (params.n - 1) * w.log_derivative(r) * y[1]]

    out = solve_ivp(rhs, (r_eps, r_eval[-1]), [s.u, s.du], method="DOP853", rtol=1e-13, atol=1e-15, t_eval=r_eval)
    assert out.success
    return out.y


def test_series_start_values():
    s = series_start(ModelParams(3), 0.5, 1e-3)
    assert s.r == 1e-3
    assert s.du == pytest.approx(-1.953125e-5, rel=1e-14)
    assert s.u == pytest.approx(0.499999990234375, rel=1e-15)
    with pytest.raises(DomainError):
        series_start(ModelParams(3), 0.0, 1e-3)
    with pytest.raises(DomainError):
        series_start(ModelParams(3), 0.5, 0.0)


def test_series_start_against_tiny_step_reference():
    """Start the reference very close to 0 and compare at the series radius."""
    params, w = ModelParams(4), WarpingFunction.sinh()
    u0, r_eps = 0.6, 1e-3
    s = series_start(params, u0, r_eps)
    ref = scipy_reference(params, w, u0, 1e-7, np.array([1e-7, r_eps]))
    # the dropped term is O(r^4); with r = 1e-3 that is ~1e-13
    assert s.u == pytest.approx(ref[0, -1], abs=1e-12)
    assert s.du == pytest.approx(ref[1, -1], rel=1e-6)


@pytest.mark.parametrize("warp", ["euclidean", "sinh", "scaled-hyperbolic"])
@pytest.mark.parametrize("u0", [0.3, 0.8, 1.02])
def test_integrate_matches_scipy(warp, u0):
    params = ModelParams(4)
    from radial_yamabe.geometry import parse_warp
    w = parse_warp(warp, 4)
    sol = integrate(params, w, u0, OdeConfig(r_max=6.0))
    mask = sol.r >= sol.config.series_radius
    ref = scipy_reference(params, w, u0, sol.config.series_radius, sol.r[mask])
    assert np.max(np.abs(sol.u[mask] / ref[0] - 1)) <= 1e-8


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("b", [1.5, 2.0, 4.0])
def test_integrate_matches_closed_form(family, n, b):
    sol = family(n, b)
    hp = HyperbolicFamilyParam(b, ModelParams(n))
    assert sol.termination is Termination.REACHED_RMAX
    assert np.max(np.abs(sol.u / hyperbolic_family_radial(hp, sol.r) - 1)) <= 1e-6


def test_constant_solution_short_circuit():
    sol = integrate(ModelParams(3), WarpingFunction.scaled_hyperbolic(3), 1.0, OdeConfig(r_max=5))
    assert np.all(sol.u == 1.0) and np.all(sol.du == 0.0)
    assert sol.termination is Termination.REACHED_RMAX and sol.r_last == 5.0


def test_blowup_is_located():
    cfg = OdeConfig(r_max=20)
    sol = integrate(ModelParams(3), WarpingFunction.scaled_hyperbolic(3), 1.05, cfg)
    assert sol.termination is Termination.BLOW_UP
    assert 5 < sol.r_stop < 10
    # near the pole |u'| is huge, so locating r to machine precision still
    # leaves a visible relative offset in u
    assert sol.u[-1] == pytest.approx(cfg.blowup_threshold, rel=1e-3)
    assert np.all(sol.u[:-1] < cfg.blowup_threshold)
    assert np.all(np.diff(sol.u) > 0)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_blowup_higher_dimensions(n):
    sol = integrate(ModelParams(n), WarpingFunction.scaled_hyperbolic(n), 1.5, OdeConfig(r_max=40))
    assert sol.termination is Termination.BLOW_UP


def test_underflow_event():
    cfg = OdeConfig(r_max=80, underflow_threshold=1e-2)
    sol = integrate(ModelParams(3), WarpingFunction.sinh(), 0.1, cfg)
    assert sol.termination is Termination.UNDERFLOW
    assert sol.u[-1] == pytest.approx(1e-2, rel=1e-6)
    assert np.all(sol.u >= 1e-2 * (1 - 1e-9))


def test_output_grid_shape():
    cfg = OdeConfig(r_max=3.0, output_step=0.5, geometric_points=5)
    g = output_grid(cfg)
    assert g[0] == cfg.series_radius and g[-1] == 3.0
    assert np.all(np.diff(g) > 0)
    assert np.allclose(g[5:], [1.5, 2.0, 2.5, 3.0])


@pytest.mark.parametrize("kwargs", [
    {"rel_tol": 0}, {"abs_tol": -1}, {"series_radius": 0}, {"series_radius": 30},
    {"blowup_threshold": 0.5}, {"max_steps": 0}, {"output_step": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        OdeConfig(**kwargs).validate()


def test_step_budget_exhaustion():
    sol = integrate(ModelParams(3), WarpingFunction.sinh(), 0.5, OdeConfig(r_max=10, max_steps=5))
    assert sol.termination is Termination.STEP_FAILURE
    assert sol.r_stop < 10


def test_table_range_enforced():
    r = np.linspace(0, 5, 101)
    w = WarpingFunction.from_table(np.column_stack([r, np.sinh(r), np.cosh(r), np.sinh(r)]))
    with pytest.raises(RangeError):
        integrate(ModelParams(3), w, 0.5, OdeConfig(r_max=6))
    sol = integrate(ModelParams(3), w, 0.5, OdeConfig(r_max=5))
    ref = integrate(ModelParams(3), WarpingFunction.sinh(), 0.5, OdeConfig(r_max=5))
    assert np.max(np.abs(sol.u - ref.u)) < 1e-4


def test_divergence_form_residual():
    """(f^{n-1} u')' / f^{n-1} = c_n (u^p - u), differentiated from samples."""
    params, w = ModelParams(4), WarpingFunction.sinh()
    sol = integrate(params, w, 0.7, OdeConfig(r_max=10, output_step=0.005))
    mask = (sol.r >= 1) & (sol.r <= 10)
    r, u, du = sol.r[mask], sol.u[mask], sol.du[mask]
    f = w.eval(r)[0]
    flux = f ** (params.n - 1) * du
    lhs = np.gradient(flux, r, edge_order=2) / f ** (params.n - 1)
    rhs = params.c_n * (u**params.p - u)
    assert np.max(np.abs(lhs - rhs)[2:-2]) <= 1e-4


def test_tolerance_refinement_converges():
    params, w = ModelParams(3), WarpingFunction.scaled_hyperbolic(3)
    hp = HyperbolicFamilyParam(2.0, params)
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        sol = integrate(params, w, family_u0(params, 2.0), OdeConfig(r_max=10, rel_tol=tol, abs_tol=tol / 100))
        errs.append(np.max(np.abs(sol.u / hyperbolic_family_radial(hp, sol.r) - 1)))
    assert errs[0] > errs[1] > errs[2]


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 6), st.floats(0.05, 0.999))
def test_subsolutions_stay_monotone(n, u0):
    sol = integrate(ModelParams(n), WarpingFunction.scaled_hyperbolic(n), u0, OdeConfig(r_max=8, output_step=0.1))
    assert np.all(sol.u[1:] < 1)
    assert np.all(sol.du[1:] < 0)
    assert np.all(np.diff(sol.u) < 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.001, 3.0))
def test_supersolutions_increase(u0):
    sol = integrate(ModelParams(3), WarpingFunction.sinh(), u0, OdeConfig(r_max=8, output_step=0.1))
    assert np.all(sol.du[1:] > 0)


def test_solution_at_and_io(tmp_path, family):
    sol = family(3, 2.0)
    hp = HyperbolicFamilyParam(2.0, ModelParams(3))
    u, du = solution_at(sol, 3.337)
    assert u == pytest.approx(hyperbolic_family_radial(hp, 3.337), rel=1e-8)
    with pytest.raises(RangeError):
        solution_at(sol, 100.0)
    path = tmp_path / "sol.csv"
    sol.write_csv(path)
    sol.write_metadata(tmp_path / "sol.json")
    meta = json.loads((tmp_path / "sol.json").read_text())
    back = RadialSolution.read_csv(path, meta)
    assert np.array_equal(back.r, sol.r) and np.array_equal(back.u, sol.u)
    assert meta["termination"] == "ReachedRmax" and meta["n"] == 3
    with pytest.raises(DomainError):
        RadialSolution.read_csv(path)


def test_solution_invariants():
    with pytest.raises(DomainError):
        RadialSolution.from_samples(ModelParams(3), [0.1, 1.0], [1, 1], [0, 0])
    with pytest.raises(DomainError):
        RadialSolution.from_samples(ModelParams(3), [0.0, 1.0], [1, -1], [0, 0])
    sol = RadialSolution.from_samples(ModelParams(3), [0.0, 1.0, 2.0], [1, 0.5, 0.25], [0, -0.5, -0.25])
    with pytest.raises(ValueError):
        sol.u[0] = 3
    assert len(sol) == 3 and math.isclose(sol.r_last, 2.0)


def test_determinism():
    a = integrate(ModelParams(5), WarpingFunction.sinh(), 0.4, OdeConfig(r_max=12))
    b = integrate(ModelParams(5), WarpingFunction.sinh(), 0.4, OdeConfig(r_max=12))
    assert np.array_equal(a.u, b.u) and a.stats == b.stats


def test_dense_output_table_matches_scipy():
    from scipy.integrate._ivp.rk import RK45

    from radial_yamabe.ode import _A, _B, _C, _DENSE, _E

    assert np.allclose(_DENSE, RK45.P, rtol=1e-15, atol=0)
    assert np.allclose(_C[:6], RK45.C, rtol=0, atol=1e-16)
    assert np.allclose(_B, RK45.B, rtol=1e-15)
    assert np.allclose(_E, -RK45.E, rtol=1e-15)  # opposite sign convention; only |err| is used
    for i in range(1, 6):
        assert np.allclose(_A[i], RK45.A[i, :i], rtol=1e-15)
