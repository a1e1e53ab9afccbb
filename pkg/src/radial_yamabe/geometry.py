"""Warped-product geometry: model constants, warping functions, curvature.

A rotationally symmetric metric on R^n is written ``g = dr^2 + f(r)^2 dTheta^2``
with ``f(0) = 0``, ``f'(0) = 1`` and ``f > 0`` for ``r > 0``.  Everything here
is pure and vectorised over numpy arrays of radii.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import DomainError, InvariantError, RangeError, SingularityError

__all__ = [
    "ModelParams",
    "model_params",
    "WarpKind",
    "WarpingFunction",
    "warp_eval",
    "drift_coefficient",
    "radial_ricci",
    "scalar_curvature",
    "WarpBoundCertificate",
    "certify_warp_bounds",
    "parse_warp",
]


@dataclass(frozen=True)
class ModelParams:
    """Dimension ``n`` and the derived constants of the equation.

    ``c_n = (n - 2) / (4 (n - 1))`` multiplies both the linear and the
    nonlinear term; ``p = (n + 2) / (n - 2)`` is the critical exponent.
    """

    n: int
    c_n: float = field(init=False)
    p: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise DomainError(f"n must be an integer, got {self.n!r}")
        if self.n < 3:
            raise DomainError("n must be ≥ 3")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c_n", (self.n - 2) / (4 * (self.n - 1)))
        object.__setattr__(self, "p", (self.n + 2) / (self.n - 2))

    @property
    def hyperbolic_scale(self) -> float:
        """``k = sqrt(n (n - 1))``; the warp ``k sinh(r/k)`` has R = -1."""
        return math.sqrt(self.n * (self.n - 1))


def model_params(n: int) -> ModelParams:
    return ModelParams(n)


class WarpKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SINH = "sinh"
    SCALED_HYPERBOLIC = "scaled-hyperbolic"
    TABULATED = "tabulated"


@dataclass(frozen=True, eq=False)
class WarpingFunction:
    """A warping function ``f`` together with ``f'`` and ``f''``.

    Use the constructors :meth:`euclidean`, :meth:`sinh`,
    :meth:`scaled_hyperbolic` and :meth:`from_table` rather than building
    instances directly.
    """

    kind: WarpKind
    scale: float = 1.0
    n: int | None = None
    table: np.ndarray | None = None
    source: str | None = None
    _spline: object = field(default=None, repr=False)

    # -- constructors ---------------------------------------------------
    @classmethod
    def euclidean(cls) -> "WarpingFunction":
        return cls(WarpKind.EUCLIDEAN)

    @classmethod
    def sinh(cls) -> "WarpingFunction":
        return cls(WarpKind.SINH)

    @classmethod
    def scaled_hyperbolic(cls, n: int) -> "WarpingFunction":
        k = ModelParams(n).hyperbolic_scale
        return cls(WarpKind.SCALED_HYPERBOLIC, scale=k, n=int(n))

    @classmethod
    def from_table(cls, rows, source: str | None = None) -> "WarpingFunction":
        """Build a tabulated warp from rows ``(r, f, df, d2f)``.

        Interpolation is monotone cubic (PCHIP slopes) on ``(r, f)`` except
        that the slope at ``r = 0`` is pinned to the tabulated ``f'(0) = 1``.
        ``f'`` and ``f''`` come from the interpolant.
        """
        tab = np.asarray(rows, dtype=float)
        if tab.ndim != 2 or tab.shape[1] != 4 or tab.shape[0] < 3:
            raise DomainError("warp table needs >= 3 rows of (r, f, df, d2f)")
        r, f, df = tab[:, 0], tab[:, 1], tab[:, 2]
        if r[0] != 0.0 or f[0] != 0.0 or not math.isclose(df[0], 1.0, abs_tol=1e-12):
            raise DomainError("warp table must start at r=0 with f=0, f'=1")
        if np.any(np.diff(r) <= 0):
            raise DomainError("warp table radii must be strictly increasing")
        if np.any(f[1:] <= 0):
            raise InvariantError("tabulated warp has f <= 0 at some r > 0")
        slopes = PchipInterpolator(r, f).derivative()(r)
        slopes[0] = 1.0
        spline = CubicHermiteSpline(r, f, slopes, extrapolate=False)
        tab.setflags(write=False)
        return cls(WarpKind.TABULATED, table=tab, source=source, _spline=spline)

    @classmethod
    def from_csv(cls, path) -> "WarpingFunction":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["r", "f", "df", "d2f"]:
                raise DomainError(f"{path}: expected header r,f,df,d2f, got {header}")
            rows = [[float(x) for x in line] for line in reader if line]
        return cls.from_table(rows, source=str(path))

    # -- evaluation -----------------------------------------------------
    @property
    def label(self) -> str:
        if self.kind is WarpKind.TABULATED:
            return f"table:{self.source}" if self.source else "table"
        return self.kind.value

    @property
    def r_range(self) -> tuple[float, float]:
        if self.kind is WarpKind.TABULATED:
            return float(self.table[0, 0]), float(self.table[-1, 0])
        return 0.0, math.inf

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(np.isnan(r)):
            raise DomainError("warp evaluated at negative radius")
        if self.kind is WarpKind.TABULATED and np.any(r > self.table[-1, 0]):
            raise RangeError(f"r beyond warp table range [0, {self.table[-1, 0]}]")
        return r

    def eval(self, r):
        """Return ``(f, f', f'')`` at ``r`` (scalar or array)."""
        r = self._check(r)
        if self.kind is WarpKind.EUCLIDEAN:
            out = r.copy(), np.ones_like(r), np.zeros_like(r)
        elif self.kind is WarpKind.SINH:
            out = np.sinh(r), np.cosh(r), np.sinh(r)
        elif self.kind is WarpKind.SCALED_HYPERBOLIC:
            k = self.scale
            s = np.sinh(r / k)
            out = k * s, np.cosh(r / k), s / k
        else:
            sp = self._spline
            out = sp(r), sp(r, 1), sp(r, 2)
        if np.ndim(r) == 0:
            return tuple(float(x) for x in out)
        return out

    def log_derivative(self, r):
        """``f'(r) / f(r)`` for ``r > 0``, evaluated without overflow."""
        r = self._check(r)
        if np.any(r == 0):
            raise SingularityError("f'/f is singular at r = 0")
        if self.kind is WarpKind.EUCLIDEAN:
            out = 1.0 / r
        elif self.kind is WarpKind.SINH:
            out = 1.0 / np.tanh(r)
        elif self.kind is WarpKind.SCALED_HYPERBOLIC:
            out = 1.0 / (self.scale * np.tanh(r / self.scale))
        else:
            f, df, _ = self.eval(r)
            out = np.asarray(df) / np.asarray(f)
        return float(out) if np.ndim(out) == 0 else out

    def curvature_ratio(self, r):
        """``f''(r) / f(r)`` for ``r > 0``."""
        r = self._check(r)
        if np.any(r == 0):
            raise SingularityError("f''/f is singular at r = 0")
        if self.kind is WarpKind.EUCLIDEAN:
            out = np.zeros_like(r)
        elif self.kind is WarpKind.SINH:
            out = np.ones_like(r)
        elif self.kind is WarpKind.SCALED_HYPERBOLIC:
            out = np.full_like(r, 1.0 / self.scale**2)
        else:
            f, _, d2f = self.eval(r)
            out = np.asarray(d2f) / np.asarray(f)
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.n is not None:
            d["n"] = self.n
        if self.source is not None:
            d["source"] = self.source
        return d


def parse_warp(spec: str, n: int) -> WarpingFunction:
    """Parse ``euclidean | sinh | scaled-hyperbolic | table:<path>``."""
    spec = spec.strip()
    if spec == "euclidean":
        return WarpingFunction.euclidean()
    if spec == "sinh":
        return WarpingFunction.sinh()
    if spec == "scaled-hyperbolic":
        return WarpingFunction.scaled_hyperbolic(n)
    if spec.startswith("table:"):
        return WarpingFunction.from_csv(spec[len("table:"):])
    raise DomainError(f"unknown warp spec {spec!r}")


def warp_eval(w: WarpingFunction, r):
    return w.eval(r)


def drift_coefficient(w: WarpingFunction, params: ModelParams, r):
    """First-order coefficient ``(n - 1) f'/f`` of the radial Laplacian."""
    return (params.n - 1) * w.log_derivative(r)


def radial_ricci(w: WarpingFunction, params: ModelParams, r):
    return -(params.n - 1) * w.curvature_ratio(r)


def scalar_curvature(w: WarpingFunction, params: ModelParams, r):
    """Scalar curvature of ``dr^2 + f^2 dTheta^2`` on R^n.

    ``R = -2 (n-1) f''/f - (n-1)(n-2) (f'^2 - 1)/f^2``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise SingularityError("scalar curvature formula is singular at r = 0")
    n = params.n
    if w.kind is WarpKind.SCALED_HYPERBOLIC or w.kind is WarpKind.SINH:
        # (cosh^2 - 1) / sinh^2 = 1 exactly; avoids cancellation at small r
        k = w.scale
        tangential = np.full_like(r, 1.0 / k**2)
    else:
        f, df, _ = w.eval(r)
        tangential = (np.asarray(df) - 1.0) * (np.asarray(df) + 1.0) / np.asarray(f) ** 2
    out = -2 * (n - 1) * w.curvature_ratio(r) - (n - 1) * (n - 2) * tangential
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WarpBoundCertificate:
    """Sampled witness of ``|f'/f| <= C_o`` on ``[R_o, r_max]``.

    ``C_second`` is the matching sampled bound on ``|f''/f|``, the extra
    hypothesis of the barrier estimate.  No claim is made off the recorded grid.
    """

    R_o: float
    r_max: float
    C_o: float
    argmax_r: float
    f_at_rmax: float
    growth_ok: bool
    samples: int
    spacing: float
    C_second: float = math.nan

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def certify_warp_bounds(w: WarpingFunction, R_o: float, r_max: float, samples: int = 1000) -> WarpBoundCertificate:
    if not (0 < R_o < r_max):
        raise DomainError("need 0 < R_o < r_max")
    if samples < 2:
        raise DomainError("need at least 2 samples")
    grid = np.linspace(R_o, r_max, samples)
    f, df, _ = w.eval(grid)
    if np.any(f <= 0):
        bad = grid[np.argmax(f <= 0)]
        raise InvariantError(f"warp has f <= 0 at r = {bad}")
    ratio = np.abs(w.log_derivative(grid))
    i = int(np.argmax(ratio))
    second = float(np.max(np.abs(w.curvature_ratio(grid))))
    growth_ok = bool(f[-1] > f[0] and np.all(df > 0))
    return WarpBoundCertificate(
        R_o=float(R_o),
        r_max=float(r_max),
        C_o=float(ratio[i]),
        argmax_r=float(grid[i]),
        f_at_rmax=float(f[-1]),
        growth_ok=growth_ok,
        samples=int(samples),
        spacing=float(grid[1] - grid[0]),
        C_second=second,
    )
