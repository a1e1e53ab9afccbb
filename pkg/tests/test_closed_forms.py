import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from radial_yamabe.closed_forms import (
    HyperbolicFamilyParam,
    conformal_identity_check,
    euclidean_family,
    euclidean_family_derivs,
    euclidean_residual,
    family_conformal_length,
    family_u0,
    hyperbolic_family,
    hyperbolic_family_derivs,
    hyperbolic_family_radial,
    hyperbolic_family_radial_derivs,
    poincare_factor,
    radial_residual,
    radius_to_rho,
    rho_to_radius,
)
from radial_yamabe.errors import DomainError, SingularityError
from radial_yamabe.geometry import ModelParams, WarpingFunction

_rho, _r = sp.symbols("rho r", positive=True)


def _sympy_family(n, b):
    """Symbolic u_b(rho), w_b(rho) and u_b(r) built from the defining formulas."""
    q = sp.Rational(n - 2, 2)
    b = sp.nsimplify(b)
    u = (b * (1 - _rho**2) / (b**2 - _rho**2)) ** q
    w = (4 * b**2 * n * (n - 1)) ** (q / 2) / (b**2 - _rho**2) ** q
    k = sp.sqrt(n * (n - 1))
    u_r = u.subs(_rho, sp.tanh(_r / (2 * k)))
    return u, w, u_r


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("b", [1.5, 2.0, 5.0])
def test_derivatives_match_symbolic_oracle(n, b):
    params = ModelParams(n)
    u, w, u_r = _sympy_family(n, b)
    pts = [0.05, 0.3, 0.6, 0.9]
    fns = {name: [sp.lambdify(x, sp.diff(e, x, j)) for j in range(3)]
           for name, e, x in (("u", u, _rho), ("w", w, _rho), ("ur", u_r, _r))}
    hp = HyperbolicFamilyParam(b, params)
    for rho in pts:
        ours = hyperbolic_family_derivs(hp, rho)
        assert np.allclose(ours, [f(rho) for f in fns["u"]], rtol=1e-12, atol=1e-14)
        ours = euclidean_family_derivs(params, b, rho)
        assert np.allclose(ours, [f(rho) for f in fns["w"]], rtol=1e-12, atol=1e-14)
    for r in [0.3, 2.0, 7.5, 20.0]:
        ours = hyperbolic_family_radial_derivs(hp, r)
        assert np.allclose(ours, [f(r) for f in fns["ur"]], rtol=1e-10, atol=1e-16)


def test_poincare_factor_values():
    # oracle: mpmath, (4n(n-1))^((n-2)/4) (1-rho^2)^(-(n-2)/2)
    assert poincare_factor(ModelParams(3), 0.0) == pytest.approx(2.21336383940064318, rel=1e-14)
    assert poincare_factor(ModelParams(4), 0.0) == pytest.approx(6.92820323027550917, rel=1e-14)
    assert poincare_factor(ModelParams(4), 0.5) == pytest.approx(9.23760430703401223, rel=1e-14)
    with pytest.raises(DomainError):
        poincare_factor(ModelParams(3), 1.0)


def test_family_point_values():
    params = ModelParams(4)
    assert hyperbolic_family(HyperbolicFamilyParam(1.0, params), 0.7) == 1.0
    assert hyperbolic_family(HyperbolicFamilyParam(2.0, params), 0.0) == pytest.approx(0.5)
    assert euclidean_family(params, 2.0, 0.0) == pytest.approx(3.46410161513775459, rel=1e-14)
    with pytest.raises(DomainError):
        euclidean_family(params, 2.0, 2.0)
    with pytest.raises(DomainError):
        HyperbolicFamilyParam(0.5, params)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("b", [1.0, 1.3, 2.0, 5.0, 40.0])
def test_factorisation(n, b):
    params = ModelParams(n)
    rho = np.linspace(0, 0.99, 300)
    lhs = hyperbolic_family(HyperbolicFamilyParam(b, params), rho) * poincare_factor(params, rho)
    assert np.max(np.abs(lhs / euclidean_family(params, b, rho) - 1)) <= 1e-12


@settings(max_examples=60)
@given(st.integers(3, 8), st.floats(1.0001, 50.0), st.floats(0.0, 0.999))
def test_family_below_one_and_decreasing_in_b(n, b, rho):
    params = ModelParams(n)
    u = hyperbolic_family(HyperbolicFamilyParam(b, params), rho)
    assert 0 < u < 1
    # larger b pushes u_b further from 1 at every point
    assert hyperbolic_family(HyperbolicFamilyParam(b * 1.5, params), rho) <= u


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("b", [1.0, 2.0, 5.0])
def test_residuals_on_rho_grid(n, b):
    params = ModelParams(n)
    rho = np.linspace(0.01, 0.95, 200)
    r = rho_to_radius(params, rho)
    hp = HyperbolicFamilyParam(b, params)
    res = radial_residual(WarpingFunction.scaled_hyperbolic(n), params, *hyperbolic_family_radial_derivs(hp, r), r)
    assert np.max(np.abs(res)) <= 1e-9
    with mpmath.workdps(30):
        rho_mp = np.array([mpmath.mpf(float(x)) for x in rho], dtype=object)
        wres = euclidean_residual(params, *euclidean_family_derivs(params, b, rho_mp), rho_mp)
    assert max(abs(x) for x in wres) <= 1e-20


def test_euclidean_residual_long_double():
    params = ModelParams(5)
    rho = np.linspace(0.01, 0.95, 200).astype(np.longdouble)
    res = euclidean_residual(params, *euclidean_family_derivs(params, 2.0, rho), rho)
    assert res.dtype == np.longdouble
    assert np.max(np.abs(res)) <= 1e-9


def test_residual_detects_wrong_profile():
    params = ModelParams(3)
    r = np.linspace(0.5, 5, 20)
    u = np.full_like(r, 0.5)
    res = radial_residual(WarpingFunction.scaled_hyperbolic(3), params, u, 0 * r, 0 * r, r)
    assert np.allclose(res, -params.c_n * (0.5**5 - 0.5))


def test_residual_guards():
    params = ModelParams(3)
    with pytest.raises(SingularityError):
        radial_residual(WarpingFunction.sinh(), params, 1.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        radial_residual(WarpingFunction.sinh(), params, -1.0, 0.0, 0.0, 1.0)
    with pytest.raises(SingularityError):
        euclidean_residual(params, 1.0, 0.0, 0.0, 0.0)


def test_rho_radius_values_and_inverse():
    params = ModelParams(3)
    assert rho_to_radius(params, 0.5) == pytest.approx(2.69103953238808661, rel=1e-14)
    # oracle: geodesic length of [0, 0.5] in the scaled Poincare metric
    k = params.hyperbolic_scale
    length, _ = quad(lambda s: 2 * k / (1 - s * s), 0, 0.5, epsabs=1e-14)
    assert rho_to_radius(params, 0.5) == pytest.approx(length, abs=1e-8)
    r = np.linspace(0, 30, 301)
    assert np.allclose(rho_to_radius(params, radius_to_rho(params, r))[:200], r[:200], rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("n, b, expected", [
    (3, 2.0, 2.69103953238808661),
    (4, 3.0, 2.40113226770588735),
    (3, 5.0, 0.993182623367421072),
])
def test_conformal_length_closed_form(n, b, expected):
    params = ModelParams(n)
    assert family_conformal_length(params, b) == pytest.approx(expected, rel=1e-14)
    hp = HyperbolicFamilyParam(b, params)
    val, _ = quad(lambda r: hyperbolic_family_radial(hp, r) ** (2 / (n - 2)), 0, np.inf, limit=400)
    assert val == pytest.approx(expected, rel=1e-8)
    assert family_conformal_length(params, 1.0) == math.inf


def test_family_u0():
    assert family_u0(ModelParams(3), 4.0) == pytest.approx(0.5)
    assert family_u0(ModelParams(6), 2.0) == pytest.approx(0.25)
    assert family_u0(ModelParams(4), 1.0) == 1.0


def test_conformal_identity_second_order():
    params = ModelParams(3)
    hp = HyperbolicFamilyParam(2.0, params)
    prof = lambda rho: hyperbolic_family(hp, rho)  # noqa: E731
    coarse = conformal_identity_check(params, prof, fd_step=1e-4)
    fine = conformal_identity_check(params, prof, fd_step=5e-5)
    assert coarse.max_abs_residual <= 1e-5
    assert 3.5 <= coarse.max_abs_residual / fine.max_abs_residual <= 4.5


def test_conformal_identity_constant_profile():
    # u = 1 solves the hyperbolic equation, so the identity is satisfied with
    # Lap_flat v = c_n v^p up to truncation error
    params = ModelParams(3)
    rep = conformal_identity_check(params, lambda rho: rho * 0 + 1, grid=np.linspace(0.1, 0.7, 61))
    assert rep.max_abs_residual <= 1e-5


def test_conformal_identity_holds_for_arbitrary_profiles():
    # the identity is a covariance statement, valid for any smooth u
    params = ModelParams(4)
    prof = lambda rho: 1 + rho**2  # noqa: E731
    coarse = conformal_identity_check(params, prof, fd_step=2e-4)
    fine = conformal_identity_check(params, prof, fd_step=1e-4)
    assert 3.5 <= coarse.max_abs_residual / fine.max_abs_residual <= 4.5


def test_conformal_identity_detects_wrong_factor():
    params = ModelParams(3)
    hp = HyperbolicFamilyParam(2.0, params)
    bad_v = lambda rho: 1.01 * poincare_factor(params, rho)  # noqa: E731
    rep = conformal_identity_check(params, lambda rho: hyperbolic_family(hp, rho), v_profile=bad_v)
    assert rep.max_abs_residual > 1e-2


def test_conformal_identity_grid_guard():
    with pytest.raises(DomainError):
        conformal_identity_check(ModelParams(3), lambda x: x * 0 + 1, grid=[0.5, 1.0])
