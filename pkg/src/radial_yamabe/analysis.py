"""Post-processing of radial trajectories.

* ``classify``: constant solution / decreasing-below-one / increasing-above-one.
* ``conformal_length``: length of a radial ray in ``u^{4/(n-2)} g``; a finite
  length means the conformal metric is incomplete.  Completeness is judged
  along the radial ray only, which for radial ``u`` covers every ray.
* ``decay_fit`` / ``barrier_fit``: exponential upper bounds for subsolutions.
* ``sweep``: all of the above over a grid of central values ``u0``.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad, simpson, trapezoid

from .errors import DomainError, FitError, QuadratureError, YamabeError
from .geometry import ModelParams, WarpingFunction
from .ode import OdeConfig, RadialSolution, Termination, integrate

__all__ = [
    "SolutionKind",
    "SolutionClass",
    "Verdict",
    "CompletenessReport",
    "DecayFit",
    "BarrierFit",
    "SweepRow",
    "classify",
    "conformal_length",
    "decay_fit",
    "default_decay_window",
    "integral_ratio_check",
    "barrier_fit",
    "sweep",
    "write_sweep_csv",
    "write_sweep_json",
    "SWEEP_HEADER",
]

EQ_TOL = 1e-7
MAX_RMS_LOG_RESIDUAL = 0.05
MIN_FIT_SAMPLES = 8
BARRIER_C_GRID = np.geomspace(1e-3, 1e3, 121)
BARRIER_HALVINGS = 20


class SolutionKind(str, enum.Enum):
    CONSTANT_ONE = "ConstantOne"
    SUBSOLUTION = "Subsolution"
    SUPERSOLUTION = "Supersolution"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SolutionClass:
    kind: SolutionKind
    witness: float | None = None


class Verdict(str, enum.Enum):
    COMPLETE = "Complete"
    INCOMPLETE = "Incomplete"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DecayFit:
    c: float
    C_tilde: float
    window: tuple[float, float]
    rms_log_residual: float
    samples: int
    C_envelope: float | None = None

    @property
    def e_foldings(self) -> float:
        return self.c * (self.window[1] - self.window[0])

    def bound(self, r):
        """``C e^{-c r}`` with ``C`` the envelope constant when available."""
        amp = self.C_envelope if self.C_envelope is not None else self.C_tilde
        return amp * np.exp(-self.c * np.asarray(r))


@dataclass(frozen=True)
class CompletenessReport:
    length_numeric: float
    tail_rate: float | None
    length_total: float
    verdict: Verdict
    reason: str = ""


@dataclass(frozen=True)
class BarrierFit:
    a: float
    C: float
    max_violation: float
    halvings: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= 0


def classify(sol: RadialSolution, eq_tol: float = EQ_TOL) -> SolutionClass:
    if len(sol) < 2:
        raise DomainError("classification needs at least two samples")
    u, du = sol.u, sol.du
    if np.max(np.abs(u - 1.0)) <= eq_tol:
        return SolutionClass(SolutionKind.CONSTANT_ONE)
    for kind, ok in (
        (SolutionKind.SUBSOLUTION, (u < 1) & (du < 0)),
        (SolutionKind.SUPERSOLUTION, (u > 1) & (du > 0)),
    ):
        ok = ok[1:]
        if ok[-1]:
            # first index after which the pattern never breaks
            bad = np.flatnonzero(~ok)
            first = 0 if bad.size == 0 else bad[-1] + 1
            return SolutionClass(kind, float(sol.r[1 + first]))
    return SolutionClass(SolutionKind.INDETERMINATE)


def default_decay_window(sol: RadialSolution) -> tuple[float, float]:
    """Second half of the sampled range."""
    return 0.5 * sol.r_last, sol.r_last


def decay_fit(sol: RadialSolution, window: tuple[float, float] | None = None, classification: SolutionClass | None = None) -> DecayFit:
    """Least-squares line through ``(r, ln u)`` on ``window``.

    Returns ``c = -slope`` and ``C_tilde = exp(intercept)`` so that
    ``u ~ C_tilde exp(-c r)`` on the window.  ``C_envelope`` is the smallest
    amplitude with ``u <= C_envelope exp(-c r)`` at every sample from the
    window start outwards.
    """
    cls = classification or classify(sol)
    if cls.kind is not SolutionKind.SUBSOLUTION:
        raise FitError(f"decay fit needs a subsolution, got {cls.kind.value}")
    lo, hi = window or default_decay_window(sol)
    if not lo < hi:
        raise FitError("empty decay window")
    mask = (sol.r >= lo) & (sol.r <= hi)
    if sol.config is not None:
        mask &= sol.u > sol.config.underflow_threshold
    if mask.sum() < MIN_FIT_SAMPLES:
        raise FitError(f"only {int(mask.sum())} samples in window [{lo}, {hi}]; need {MIN_FIT_SAMPLES}")
    r, logu = sol.r[mask], np.log(sol.u[mask])
    slope, intercept = np.polyfit(r, logu, 1)
    rms = float(np.sqrt(np.mean((logu - (slope * r + intercept)) ** 2)))
    outer = sol.r >= lo
    envelope = float(np.max(sol.u[outer] * np.exp(-slope * sol.r[outer])))
    return DecayFit(float(-slope), float(math.exp(intercept)), (float(lo), float(hi)), rms, int(mask.sum()), envelope)


def conformal_length(
    sol: RadialSolution,
    fit: DecayFit | None = None,
    classification: SolutionClass | None = None,
) -> CompletenessReport:
    """Length of the radial ray ``[0, inf)`` in the conformal metric.

    The sampled part is integrated with Simpson's rule.  Beyond the last
    sample a subsolution's tail is taken from the decay fit as the closed-form
    integral of ``(C_tilde e^{-c r})^{2/(n-2)}``; a fit is trusted only with
    ``c > 0``, at least one e-folding across its window and an rms log
    residual of at most 0.05.
    """
    if len(sol) == 0:
        raise DomainError("empty solution")
    cls = classification or classify(sol)
    q = 2.0 / (sol.params.n - 2)
    integrand = sol.u**q
    length = float(simpson(integrand, x=sol.r)) if len(sol) > 2 else float(trapezoid(integrand, x=sol.r))

    if cls.kind is SolutionKind.CONSTANT_ONE:
        return CompletenessReport(length, 0.0, math.inf, Verdict.COMPLETE, "u == 1: length grows linearly")

    if cls.kind is SolutionKind.SUPERSOLUTION:
        why = "solution blows up; no global conformal metric" if sol.termination is Termination.BLOW_UP else (
            "increasing branch cannot remain bounded; not extended past the data")
        return CompletenessReport(length, None, math.inf, Verdict.INCONCLUSIVE, why)

    if cls.kind is SolutionKind.SUBSOLUTION:
        if sol.termination is not Termination.REACHED_RMAX:
            return CompletenessReport(length, None, math.inf, Verdict.INCONCLUSIVE, f"run ended with {sol.termination.value}")
        if fit is None:
            try:
                fit = decay_fit(sol, classification=cls)
            except FitError as exc:
                return CompletenessReport(length, None, math.inf, Verdict.INCONCLUSIVE, str(exc))
        if fit.c <= 0 or fit.rms_log_residual > MAX_RMS_LOG_RESIDUAL or fit.e_foldings < 1.0:
            return CompletenessReport(length, fit.c, math.inf, Verdict.INCONCLUSIVE,
                                      f"decay fit not trusted (c={fit.c:.4g}, rms={fit.rms_log_residual:.3g}, e-folds={fit.e_foldings:.3g})")
        rate = fit.c * q
        tail = fit.C_tilde**q * math.exp(-rate * sol.r_last) / rate
        return CompletenessReport(length, rate, length + tail, Verdict.INCOMPLETE, "finite length: exponential tail")

    # Indeterminate data: only a tail that does not decay counts as divergence.
    half = sol.r >= 0.5 * sol.r_last
    tail_u = sol.u[half]
    if sol.termination is Termination.REACHED_RMAX and tail_u.size >= 2 and tail_u.min() >= 0.5 * tail_u[0]:
        return CompletenessReport(length, 0.0, math.inf, Verdict.COMPLETE, "u bounded below on the tail")
    return CompletenessReport(length, None, math.inf, Verdict.INCONCLUSIVE, "no sign pattern and no lower bound")


def integral_ratio_check(w: WarpingFunction, params: ModelParams, r_prime: float, r: float) -> float:
    """``int_{r'}^{r} f^{n-1}(s) ds / f^{n-1}(r)`` by adaptive quadrature."""
    if not 0 < r_prime < r:
        raise DomainError("need 0 < r' < r")
    f_r = w.eval(r)[0]
    m = params.n - 1

    def integrand(s):
        return (w.eval(s)[0] / f_r) ** m

    value, err, info = quad(integrand, r_prime, r, limit=200, epsabs=0.0, epsrel=1e-12, full_output=True)[:3]
    if not math.isfinite(value) or err > 1e-8 * max(1.0, abs(value)):
        raise QuadratureError(f"quadrature did not converge (estimate {value}, error {err})")
    return float(value)


def barrier_fit(sol: RadialSolution) -> BarrierFit:
    """Search ``(a, C)`` with ``u(r) <= 1 - a exp(-C r)`` at every sample.

    Starts from ``a = 1 - u(0)`` and takes the smallest ``C`` on a geometric
    grid over ``[1e-3, 1e3]`` (121 points) that works, halving ``a`` up to 20
    times.  If nothing works the least-violating pair is returned with a
    positive ``max_violation``.
    """
    u0 = float(sol.u[0])
    if not u0 < 1 or np.any(sol.u > 1):
        raise FitError("barrier needs u <= 1 everywhere and u(0) < 1")
    a = 1.0 - u0
    best = None
    for halving in range(BARRIER_HALVINGS + 1):
        decay = np.exp(-np.outer(BARRIER_C_GRID, sol.r))
        viol = np.max(sol.u[None, :] - (1.0 - a * decay), axis=1)
        ok = np.flatnonzero(viol <= 0)
        if ok.size:
            i = ok[0]
            return BarrierFit(a, float(BARRIER_C_GRID[i]), float(viol[i]), halving)
        i = int(np.argmin(viol))
        if best is None or viol[i] < best.max_violation:
            best = BarrierFit(a, float(BARRIER_C_GRID[i]), float(viol[i]), halving)
        a *= 0.5
    return best


@dataclass(frozen=True)
class SweepRow:
    u0: float
    classification: SolutionClass | None
    completeness: CompletenessReport | None
    decay: DecayFit | None
    termination: Termination | None
    r_stop: float | None
    error: str | None = None

    def to_dict(self) -> dict:
        cls, comp, fit = self.classification, self.completeness, self.decay
        return {
            "u0": self.u0,
            "class": cls.kind.value if cls else None,
            "witness_r": cls.witness if cls else None,
            "length_numeric": comp.length_numeric if comp else None,
            "length_total": comp.length_total if comp else None,
            "tail_rate": comp.tail_rate if comp else None,
            "verdict": comp.verdict.value if comp else None,
            "verdict_reason": comp.reason if comp else None,
            "decay_c": fit.c if fit else None,
            "decay_C": fit.C_tilde if fit else None,
            "decay_window": list(fit.window) if fit else None,
            "decay_rms_log_residual": fit.rms_log_residual if fit else None,
            "termination": self.termination.value if self.termination else None,
            "r_stop": self.r_stop,
            "error": self.error,
        }


def _sweep_row(params: ModelParams, w: WarpingFunction, u0: float, cfg: OdeConfig, eq_tol: float) -> SweepRow:
    try:
        sol = integrate(params, w, u0, cfg)
        cls = classify(sol, eq_tol)
        fit = None
        if cls.kind is SolutionKind.SUBSOLUTION and sol.termination is Termination.REACHED_RMAX:
            try:
                fit = decay_fit(sol, classification=cls)
            except FitError:
                fit = None
        comp = conformal_length(sol, fit, cls)
        return SweepRow(float(u0), cls, comp, fit, sol.termination, sol.r_stop)
    except (YamabeError, ArithmeticError, ValueError) as exc:
        return SweepRow(float(u0), None, None, None, None, None, f"{type(exc).__name__}: {exc}")


def sweep(
    params: ModelParams,
    w: WarpingFunction,
    u0_grid,
    cfg: OdeConfig | None = None,
    eq_tol: float = EQ_TOL,
    workers: int = 1,
) -> list[SweepRow]:
    """Integrate, classify and measure every ``u0``; rows sorted by ``u0``.

    Failures are recorded on their row.  ``workers > 1`` spreads rows over
    processes; the output does not depend on completion order.
    """
    cfg = cfg or OdeConfig()
    grid = sorted(float(x) for x in u0_grid)
    if any(not x > 0 for x in grid):
        raise DomainError("u0 values must be positive")
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, [params] * len(grid), [w] * len(grid), grid, [cfg] * len(grid), [eq_tol] * len(grid)))
    else:
        rows = [_sweep_row(params, w, u0, cfg, eq_tol) for u0 in grid]
    return rows


SWEEP_HEADER = ["u0", "class", "witness_r", "length_numeric", "length_total", "verdict", "decay_c", "decay_C", "termination"]


def _fmt(x, precision: int) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{precision}g}"
    return str(x)


def write_sweep_csv(rows: list[SweepRow], path, precision: int = 17) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            d = row.to_dict()
            writer.writerow([_fmt(d[k], precision) for k in SWEEP_HEADER])


def write_sweep_json(rows: list[SweepRow], path, extra: dict | None = None) -> None:
    doc = dict(extra or {})
    doc["rows"] = [_json_safe(row.to_dict()) for row in rows]
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _json_safe(d: dict) -> dict:
    # JSON has no infinity; mirror the CSV's textual form
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}
