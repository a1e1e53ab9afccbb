"""Shooting integrator for the radial equation from the regular centre.

The radial form of ``Lap_g u + c_n u = c_n u^p`` on ``dr^2 + f^2 dTheta^2`` is

    u'' + (n - 1) f'/f u' = c_n (u^p - u),   u(0) = u0,  u'(0) = 0.

The coefficient ``(n-1) f'/f ~ (n-1)/r`` is singular at the origin, so the
first ``series_radius`` is bridged with the two-term Taylor expansion and the
rest is integrated with an embedded Dormand-Prince 5(4) pair under PI step
control.  Samples on the output grid come from the pair's quartic continuous
extension.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, InvariantError, RangeError
from .geometry import ModelParams, WarpingFunction, WarpKind

__all__ = [
    "OdeConfig",
    "OdeState",
    "Termination",
    "RadialSolution",
    "series_start",
    "integrate",
    "solution_at",
    "output_grid",
]


@dataclass(frozen=True)
class OdeConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_max: float = 20.0
    series_radius: float = 1e-3
    blowup_threshold: float = 1e6
    underflow_threshold: float = 1e-14
    max_steps: int = 200_000
    min_step: float = 1e-15
    output_step: float = 0.01
    geometric_points: int = 40

    def validate(self) -> "OdeConfig":
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("tolerances must be positive")
        if not (0 < self.series_radius < self.r_max):
            raise ConfigError("need 0 < series_radius < r_max")
        if not (self.blowup_threshold > 1 > self.underflow_threshold > 0):
            raise ConfigError("need blowup_threshold > 1 > underflow_threshold > 0")
        if self.max_steps < 1 or self.min_step <= 0:
            raise ConfigError("max_steps and min_step must be positive")
        if self.output_step <= 0 or self.geometric_points < 2:
            raise ConfigError("output grid needs output_step > 0 and geometric_points >= 2")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OdeState:
    r: float
    u: float
    du: float


class Termination(str, enum.Enum):
    REACHED_RMAX = "ReachedRmax"
    BLOW_UP = "BlowUp"
    UNDERFLOW = "Underflow"
    STEP_FAILURE = "StepFailure"


def output_grid(cfg: OdeConfig) -> np.ndarray:
    """Geometric from ``series_radius`` up to ``min(1, r_max)``, uniform after."""
    knee = min(1.0, cfg.r_max)
    geo = np.geomspace(cfg.series_radius, knee, cfg.geometric_points)
    if cfg.r_max <= 1.0:
        return geo
    count = int(math.ceil((cfg.r_max - 1.0) / cfg.output_step - 1e-9))
    uni = 1.0 + cfg.output_step * np.arange(1, count + 1)
    uni[-1] = cfg.r_max
    return np.concatenate([geo, uni])


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Sampled trajectory ``(r, u, u')`` of one integration.

    ``r[0] = 0`` with ``du[0] = 0``; ``u > 0`` at every sample.
    """

    params: ModelParams
    warp: WarpingFunction | None
    u0: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    termination: Termination
    r_stop: float
    config: OdeConfig | None = None
    stats: dict = field(default_factory=dict)
    warp_label: str = ""

    def __post_init__(self):
        for name in ("r", "u", "du"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.warp_label and self.warp is not None:
            object.__setattr__(self, "warp_label", self.warp.label)
        if len(self.r) < 1 or self.r[0] != 0.0:
            raise DomainError("samples must start at r = 0")
        if np.any(np.diff(self.r) <= 0):
            raise DomainError("sample radii must be strictly increasing")
        if np.any(self.u <= 0):
            raise DomainError("solution samples must be positive")

    @classmethod
    def from_samples(cls, params: ModelParams, r, u, du, warp=None, termination=Termination.REACHED_RMAX, label="samples"):
        """Wrap externally produced samples (e.g. a synthetic profile)."""
        r = np.asarray(r, dtype=float)
        return cls(params, warp, float(np.asarray(u)[0]), r, u, du, Termination(termination), float(r[-1]), warp_label=label)

    def __len__(self) -> int:
        return len(self.r)

    @property
    def r_last(self) -> float:
        return float(self.r[-1])

    def metadata(self) -> dict:
        cfg = self.config.to_dict() if self.config else None
        return {
            "n": self.params.n,
            "warp": self.warp_label,
            "u0": self.u0,
            "termination": self.termination.value,
            "r_stop": self.r_stop,
            "tolerances": {"rel_tol": cfg["rel_tol"], "abs_tol": cfg["abs_tol"]} if cfg else None,
            "config": cfg,
            "samples": len(self),
        }

    def write_csv(self, path, precision: int = 17) -> None:
        path = Path(path)
        fmt = f"{{:.{precision}g}}"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["r", "u", "du"])
            for row in zip(self.r, self.u, self.du):
                writer.writerow([fmt.format(x) for x in row])

    def write_metadata(self, path) -> None:
        Path(path).write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read_csv(cls, path, meta: dict | None = None, params: ModelParams | None = None) -> "RadialSolution":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["r", "u", "du"]:
                raise DomainError(f"{path}: expected header r,u,du, got {header}")
            data = np.array([[float(x) for x in row] for row in reader if row])
        meta = meta or {}
        if params is None:
            if "n" not in meta:
                raise DomainError("dimension n unknown: pass params or metadata")
            params = ModelParams(int(meta["n"]))
        term = Termination(meta.get("termination", Termination.REACHED_RMAX.value))
        r_stop = meta.get("r_stop", float(data[-1, 0]))
        return cls(params, None, float(data[0, 1]), data[:, 0], data[:, 1], data[:, 2], term, float(r_stop), warp_label=meta.get("warp", str(path)))


def series_start(params: ModelParams, u0: float, r_eps: float) -> OdeState:
    """Two-term Taylor state at ``r_eps`` using ``u''(0) = c_n (u0^p - u0) / n``."""
    if not u0 > 0:
        raise DomainError("u0 must be positive")
    if not r_eps > 0:
        raise DomainError("r_eps must be positive")
    curv = params.c_n * (u0**params.p - u0) / params.n
    return OdeState(r_eps, u0 + 0.5 * curv * r_eps**2, curv * r_eps)


def _log_derivative_fn(w: WarpingFunction):
    """Scalar ``f'/f`` as a plain-float callable (the stepper's hot path)."""
    if w.kind is WarpKind.EUCLIDEAN:
        return lambda r: 1.0 / r
    if w.kind is WarpKind.SINH:
        return lambda r: 1.0 / math.tanh(r)
    if w.kind is WarpKind.SCALED_HYPERBOLIC:
        k = w.scale
        return lambda r: 1.0 / (k * math.tanh(r / k))
    return lambda r: float(w.log_derivative(r))


# Dormand-Prince 5(4) tableau; DENSE holds the quartic continuous extension.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
_DENSE = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_MAX_GROW = 5.0
_MIN_SHRINK = 0.2


class _Stepper:
    def __init__(self, params: ModelParams, w: WarpingFunction, cfg: OdeConfig):
        self.c_n, self.p, self.nm1 = params.c_n, params.p, params.n - 1
        self.log_d = _log_derivative_fn(w)
        self.cfg = cfg
        self.nfev = 0

    def rhs(self, r, u, du):
        self.nfev += 1
        if u <= 0:
            return du, math.nan
        return du, self.c_n * (u**self.p - u) - self.nm1 * self.log_d(r) * du

    def step(self, r, y, k1, h):
        ks = [k1]
        for i in range(1, 7):
            a = _A[i]
            yu = y[0] + h * sum(a[j] * ks[j][0] for j in range(i))
            yd = y[1] + h * sum(a[j] * ks[j][1] for j in range(i))
            if i == 6:
                y_new = (yu, yd)
            ks.append(self.rhs(r + _C[i] * h, yu, yd))
        err = (
            h * sum(_E[j] * ks[j][0] for j in range(7)),
            h * sum(_E[j] * ks[j][1] for j in range(7)),
        )
        return y_new, ks, err

    def error_norm(self, y, y_new, err):
        total = 0.0
        for i in range(2):
            scale = self.cfg.abs_tol + self.cfg.rel_tol * max(abs(y[i]), abs(y_new[i]))
            total += (err[i] / scale) ** 2
        return math.sqrt(total / 2)

    def initial_step(self, r, y, k1):
        cfg = self.cfg
        scale = [cfg.abs_tol + cfg.rel_tol * abs(v) for v in y]
        d0 = math.sqrt(sum((y[i] / scale[i]) ** 2 for i in range(2)) / 2)
        d1 = math.sqrt(sum((k1[i] / scale[i]) ** 2 for i in range(2)) / 2)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = (y[0] + h0 * k1[0], y[1] + h0 * k1[1])
        k2 = self.rhs(r + h0, *y1)
        d2 = math.sqrt(sum(((k2[i] - k1[i]) / scale[i]) ** 2 for i in range(2)) / 2) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, cfg.r_max - r)


def _dense(y, ks, h, theta):
    """Continuous extension at ``r + theta h`` returning ``(u, du)``."""
    powers = np.array([theta, theta**2, theta**3, theta**4])
    q = _DENSE @ powers
    return (
        y[0] + h * sum(q[j] * ks[j][0] for j in range(7)),
        y[1] + h * sum(q[j] * ks[j][1] for j in range(7)),
    )


def integrate(params: ModelParams, w: WarpingFunction, u0: float, cfg: OdeConfig | None = None) -> RadialSolution:
    """Shoot from ``u(0) = u0``, ``u'(0) = 0`` out to ``cfg.r_max`` or an event."""
    cfg = (cfg or OdeConfig()).validate()
    if not u0 > 0:
        raise DomainError("u0 must be positive")
    lo, hi = w.r_range
    if cfg.r_max > hi:
        raise RangeError(f"r_max = {cfg.r_max} beyond warp table range {hi}")
    grid = output_grid(cfg)

    if u0 == 1.0:
        r = np.concatenate([[0.0], grid])
        return RadialSolution(params, w, 1.0, r, np.ones_like(r), np.zeros_like(r),
                              Termination.REACHED_RMAX, cfg.r_max, cfg, {"steps": 0, "rejected": 0, "nfev": 0})

    f_grid, _, _ = w.eval(grid)
    if np.any(np.asarray(f_grid) <= 0):
        raise InvariantError("warp has f <= 0 on the integration range")

    stepper = _Stepper(params, w, cfg)
    start = series_start(params, u0, cfg.series_radius)
    rs, us, dus = [0.0, start.r], [float(u0), start.u], [0.0, start.du]
    r, y = start.r, (start.u, start.du)
    k1 = stepper.rhs(r, *y)
    h = stepper.initial_step(r, y, k1)
    gi = 1  # grid[0] == series_radius is already recorded
    err_prev = 1e-4
    steps = rejected = 0
    termination, r_stop = Termination.REACHED_RMAX, cfg.r_max

    while r < cfg.r_max:
        if steps >= cfg.max_steps:
            termination, r_stop = Termination.STEP_FAILURE, r
            break
        h = min(h, cfg.r_max - r)
        if h < cfg.min_step or r + h == r:
            termination, r_stop = Termination.STEP_FAILURE, r
            break
        y_new, ks, err = stepper.step(r, y, k1, h)
        err_norm = stepper.error_norm(y, y_new, err)
        if not math.isfinite(err_norm) or err_norm > 1.0:
            rejected += 1
            shrink = _MIN_SHRINK if not math.isfinite(err_norm) else max(_MIN_SHRINK, _SAFETY * err_norm ** (-1 / 5))
            h *= shrink
            continue
        steps += 1
        r_new = cfg.r_max if cfg.r_max - (r + h) < 1e-12 * max(1.0, cfg.r_max) else r + h

        event = None
        if y_new[0] > cfg.blowup_threshold:
            event = (Termination.BLOW_UP, cfg.blowup_threshold)
        elif y_new[0] < cfg.underflow_threshold:
            event = (Termination.UNDERFLOW, cfg.underflow_threshold)
        r_end = r_new
        if event is not None:
            level = event[1]

            def gap(s, _y=y, _ks=ks, _h=h, _r=r):
                return _dense(_y, _ks, _h, (s - _r) / _h)[0] - level

            try:
                r_end = brentq(gap, r, r_new, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            except ValueError:
                r_end = r_new

        while gi < len(grid) and grid[gi] <= r_end and grid[gi] <= r_new:
            if grid[gi] == r_new:
                uu, dd = y_new
            else:
                uu, dd = _dense(y, ks, h, (grid[gi] - r) / h)
            if event is not None and event[0] is Termination.UNDERFLOW and uu < cfg.underflow_threshold:
                break
            rs.append(float(grid[gi]))
            us.append(uu)
            dus.append(dd)
            gi += 1

        if event is not None:
            termination, r_stop = event[0], float(r_end)
            if r_end > rs[-1]:
                uu, dd = y_new if r_end == r_new else _dense(y, ks, h, (r_end - r) / h)
                if uu > 0:
                    rs.append(float(r_end))
                    us.append(uu)
                    dus.append(dd)
            break

        r, y = r_new, y_new
        k1 = ks[6]
        factor = _SAFETY * max(err_norm, 1e-10) ** (-_ALPHA) * err_prev**_BETA
        h *= min(_MAX_GROW, max(_MIN_SHRINK, factor))
        err_prev = max(err_norm, 1e-4)

    stats = {"steps": steps, "rejected": rejected, "nfev": stepper.nfev}
    return RadialSolution(params, w, float(u0), np.array(rs), np.array(us), np.array(dus), termination, float(r_stop), cfg, stats)


def solution_at(sol: RadialSolution, r):
    """Cubic Hermite interpolation of ``(u, u')`` between stored samples."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(r_arr > sol.r_last):
        raise RangeError(f"r outside sampled range [0, {sol.r_last}]")
    if len(sol) == 1:
        return float(sol.u[0]), float(sol.du[0])
    spline = CubicHermiteSpline(sol.r, sol.u, sol.du)
    u, du = spline(r_arr), spline(r_arr, 1)
    if np.ndim(r_arr) == 0:
        return float(u), float(du)
    return u, du
