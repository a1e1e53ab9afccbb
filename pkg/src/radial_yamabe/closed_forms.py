"""Closed-form radial solutions on the Euclidean and scaled hyperbolic balls.

On the unit ball with the Euclidean radius ``rho``:

* ``v(rho)`` is the conformal factor taking the flat metric to the scaled
  Poincare metric ``4 n (n-1) / (1 - rho^2)^2 |dx|^2`` (scalar curvature -1);
* ``w_b`` solves the flat equation ``Lap w = c_n w^p`` for ``b >= 1``;
* ``u_b = w_b / v`` solves ``Lap_h u + c_n u = c_n u^p`` on the scaled
  hyperbolic space, with ``u_1 == 1`` and ``u_b < 1`` for ``b > 1``.

Derivatives are written out by hand so that residuals measure the equations
and not differentiation error.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .errors import DomainError, SingularityError
from .geometry import ModelParams, WarpingFunction

__all__ = [
    "HyperbolicFamilyParam",
    "ResidualReport",
    "poincare_factor",
    "hyperbolic_family",
    "hyperbolic_family_derivs",
    "euclidean_family",
    "euclidean_family_derivs",
    "radius_to_rho",
    "rho_to_radius",
    "hyperbolic_family_radial",
    "hyperbolic_family_radial_derivs",
    "family_u0",
    "family_conformal_length",
    "radial_residual",
    "euclidean_residual",
    "conformal_identity_check",
]


def _scalar_or_array(x):
    return x[()] if np.ndim(x) == 0 else x


def _ratio(num: int, den: int, like):
    """``num / den`` rounded in the arithmetic of ``like`` (float, long double or mpf)."""
    like = np.asarray(like)
    if like.dtype == object:
        return mpmath.mpf(num) / den
    if np.issubdtype(like.dtype, np.floating):
        return like.dtype.type(num) / like.dtype.type(den)
    return num / den


@dataclass(frozen=True)
class HyperbolicFamilyParam:
    b: float
    params: ModelParams

    def __post_init__(self):
        if not self.b >= 1:
            raise DomainError(f"family parameter b must be >= 1, got {self.b}")

    @property
    def exponent(self) -> float:
        return (self.params.n - 2) / 2


@dataclass(frozen=True)
class ResidualReport:
    grid: np.ndarray
    residuals: np.ndarray
    max_abs_residual: float
    argmax_point: float

    @classmethod
    def from_residuals(cls, grid, residuals) -> "ResidualReport":
        grid = np.asarray(grid, dtype=float)
        residuals = np.asarray(residuals, dtype=float)
        i = int(np.argmax(np.abs(residuals)))
        return cls(grid, residuals, float(abs(residuals[i])), float(grid[i]))


def _check_rho(rho, upper=1.0, what="rho"):
    rho = np.asarray(rho)
    if np.any(rho < 0) or np.any(rho >= upper):
        raise DomainError(f"{what} must lie in [0, {upper})")
    return rho


def poincare_factor(params: ModelParams, rho):
    """``v`` with ``v^{4/(n-2)} = 4 n (n-1) / (1 - rho^2)^2``."""
    rho = _check_rho(rho)
    n = params.n
    out = (4 * n * (n - 1)) ** _ratio(n - 2, 4, rho) * (1 - rho**2) ** (-_ratio(n - 2, 2, rho))
    return _scalar_or_array(out)


def hyperbolic_family_derivs(param: HyperbolicFamilyParam, rho):
    """``(u_b, du_b/drho, d2u_b/drho2)`` as functions of the Euclidean radius."""
    rho = _check_rho(rho)
    b, q = param.b, _ratio(param.params.n - 2, 2, rho)
    d = b * b - rho**2
    g = b * (1 - rho**2) / d
    dg = 2 * b * rho * (1 - b * b) / d**2
    d2g = 2 * b * (1 - b * b) * (b * b + 3 * rho**2) / d**3
    u = g**q
    du = q * g ** (q - 1) * dg
    d2u = q * (q - 1) * g ** (q - 2) * dg**2 + q * g ** (q - 1) * d2g
    return tuple(_scalar_or_array(x) for x in (u, du, d2u))


def hyperbolic_family(param: HyperbolicFamilyParam, rho):
    rho = _check_rho(rho)
    if param.b == 1:
        return _scalar_or_array(rho * 0 + 1)
    b = param.b
    out = (b * (1 - rho**2) / (b * b - rho**2)) ** _ratio(param.params.n - 2, 2, rho)
    return _scalar_or_array(out)


def euclidean_family_derivs(params: ModelParams, b: float, rho):
    """``(w_b, w_b', w_b'')`` in the Euclidean radius; pole at ``rho = b``."""
    if not b >= 1:
        raise DomainError(f"family parameter b must be >= 1, got {b}")
    rho = _check_rho(rho, upper=b, what="rho (pole at rho = b)")
    n = params.n
    q = _ratio(n - 2, 2, rho)
    amp = (4 * b * b * n * (n - 1)) ** (q / 2)
    d = b * b - rho**2
    w = amp * d ** (-q)
    dw = amp * 2 * q * rho * d ** (-q - 1)
    d2w = amp * 2 * q * (d ** (-q - 1) + 2 * (q + 1) * rho**2 * d ** (-q - 2))
    return tuple(_scalar_or_array(x) for x in (w, dw, d2w))


def euclidean_family(params: ModelParams, b: float, rho):
    return euclidean_family_derivs(params, b, rho)[0]


def radius_to_rho(params: ModelParams, r):
    """Euclidean radius at geodesic distance ``r`` from 0 in the scaled ball."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    return _scalar_or_array(np.tanh(r / (2 * params.hyperbolic_scale)))


def rho_to_radius(params: ModelParams, rho):
    rho = _check_rho(rho)
    return _scalar_or_array(2 * params.hyperbolic_scale * np.arctanh(rho))


def hyperbolic_family_radial_derivs(param: HyperbolicFamilyParam, r):
    """``(u, du/dr, d2u/dr2)`` for ``u_b`` along a geodesic ray.

    Written through the logarithmic derivative
    ``L = (ln u)' = q (1 - b^2) t / (k (b^2 - t^2))`` with ``t = tanh(r/2k)``,
    so that ``u' = u L`` and ``u'' = u (L^2 + L')``.  Nothing is divided by
    a quantity that vanishes at infinity, and ``sech^2`` is formed from
    ``exp(-r/k)``, so the profile stays accurate (and finite) far out.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    b, q = param.b, param.exponent
    k = param.params.hyperbolic_scale
    t = np.tanh(r / (2 * k))
    e = np.exp(-r / k)
    sech2 = 4 * e / (1 + e) ** 2
    d = b * b - t**2
    u = (b * sech2 / d) ** q
    t_r = sech2 / (2 * k)
    L = q * (1 - b * b) * t / (k * d)
    L_r = q * (1 - b * b) * t_r * (b * b + t**2) / (k * d**2)
    du = u * L
    d2u = u * (L * L + L_r)
    if b == 1:
        u, du, d2u = np.ones_like(r), np.zeros_like(r), np.zeros_like(r)
    return tuple(_scalar_or_array(x) for x in (u, du, d2u))


def hyperbolic_family_radial(param: HyperbolicFamilyParam, r):
    return hyperbolic_family_radial_derivs(param, r)[0]


def family_u0(params: ModelParams, b: float) -> float:
    """Central value ``u_b(0) = b^{-(n-2)/2}``."""
    return float(b ** (-(params.n - 2) / 2))


def family_conformal_length(params: ModelParams, b: float) -> float:
    """Exact radial length ``int_0^inf u_b^{2/(n-2)} dr`` of the conformal metric."""
    if b == 1:
        return float("inf")
    return float(params.hyperbolic_scale * np.log((b + 1) / (b - 1)))


def radial_residual(w: WarpingFunction, params: ModelParams, u, du, d2u, r):
    """``u'' + (n-1) f'/f u' - c_n (u^p - u)``; zero on exact radial solutions."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("radial residual needs r > 0")
    u = np.asarray(u)
    if np.any(u <= 0):
        raise DomainError("u must be positive")
    drift = (params.n - 1) * w.log_derivative(r)
    out = d2u + drift * du - params.c_n * (u**params.p - u)
    return _scalar_or_array(out)


def euclidean_residual(params: ModelParams, w, dw, d2w, rho):
    """``w'' + (n-1)/rho w' - c_n w^p``; zero on ``w_b``.

    Constants are formed in the arithmetic of the inputs, so long double or
    mpmath object arrays give residuals free of float64 rounding.
    """
    rho = np.asarray(rho)
    if np.any(rho <= 0):
        raise SingularityError("euclidean residual needs rho > 0")
    w = np.asarray(w)
    if np.any(w <= 0):
        raise DomainError("w must be positive")
    n = params.n
    out = d2w + (n - 1) / rho * dw - _ratio(n - 2, 4 * (n - 1), w) * w ** _ratio(n + 2, n - 2, w)
    return _scalar_or_array(out)


def conformal_identity_check(
    params: ModelParams,
    u_profile: Callable,
    v_profile: Callable | None = None,
    grid=None,
    fd_step: float = 1e-4,
    digits: int | None = 30,
) -> ResidualReport:
    """Compare both sides of the conformal Laplacian identity on a rho-grid.

    With the flat metric as background (``R = 0``) and ``h = v^{4/(n-2)} |dx|^2``
    the scaled hyperbolic metric (``R_h = -1``) the identity reads
    ``Lap_flat(u v) = v^p (Lap_h u + c_n u)``.  The left side differences the
    product ``u v``; the right side uses the conformal Laplacian
    ``Lap_h u = v^{-4/(n-2)} (u'' + (n-1)/rho u' + 2 v'/v u')`` with centred
    differences for ``u'``, ``u''`` and ``v'``.

    Profiles are callables of ``rho``.  With ``digits`` set the arithmetic is
    done by mpmath at that many significant digits (profiles then receive
    object arrays of ``mpf``), so the residual shows the O(h^2) truncation
    error rather than rounding amplified by ``v^p``.  ``digits=None`` uses
    float64.
    """
    if v_profile is None:
        v_profile = lambda rho: poincare_factor(params, rho)  # noqa: E731
    grid = np.asarray(grid if grid is not None else np.linspace(0.1, 0.8, 71), dtype=float)
    if np.any(grid <= 0) or np.any(grid >= 1):
        raise DomainError("conformal identity grid must lie strictly inside (0, 1)")
    if fd_step <= 0 or np.any(grid - fd_step <= 0) or np.any(grid + fd_step >= 1):
        raise DomainError("finite-difference stencil leaves (0, 1)")
    n = params.n
    with mpmath.workdps(digits or 15):
        if digits:
            rho = np.array([mpmath.mpf(float(x)) for x in grid], dtype=object)
            h = mpmath.mpf(float(fd_step))
        else:
            rho, h = grid, float(fd_step)
        c_n, p = _ratio(n - 2, 4 * (n - 1), rho), _ratio(n + 2, n - 2, rho)

        def d1(fn):
            return (fn(rho + h) - fn(rho - h)) / (2 * h)

        def d2(fn):
            return (fn(rho + h) - 2 * fn(rho) + fn(rho - h)) / h**2

        def uv(x):
            return u_profile(x) * v_profile(x)

        lhs = d2(uv) + (n - 1) / rho * d1(uv)

        u, v = u_profile(rho), v_profile(rho)
        du = d1(u_profile)
        lap_h = v ** (-_ratio(4, n - 2, rho)) * (d2(u_profile) + (n - 1) / rho * du + 2 * d1(v_profile) / v * du)
        rhs = v**p * (lap_h + c_n * u)
        resid = np.array([float(x) for x in np.ravel(lhs - rhs)])
    return ResidualReport.from_residuals(grid, resid)
