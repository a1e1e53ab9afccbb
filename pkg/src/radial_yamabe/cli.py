"""Command-line front end.

Usage:
    radial-yamabe solve --n 3 --warp scaled-hyperbolic --u0 0.7071067811865476 --rmax 15
    radial-yamabe sweep --n 3 --warp scaled-hyperbolic --u0-min 0.1 --u0-max 2 --count 20
    radial-yamabe verify --family hyperbolic --n 3 --b 2
    radial-yamabe completeness --solution out/solution.csv
    radial-yamabe curvature --warp scaled-hyperbolic --n 3

Every command takes ``--config run.json`` (keys are the long option names with
dashes replaced by underscores; explicit flags win) and writes the resolved
options back into its JSON report, so a report re-runs the command.

Exit codes: 0 success, 1 runtime or tolerance failure, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import mpmath
import numpy as np

from . import analysis, closed_forms, geometry, ode
from .errors import ConfigError, DomainError, InvariantError, YamabeError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

WARP_HELP = "euclidean | sinh | scaled-hyperbolic | table:<path>"


class UsageError(Exception):
    pass


def _fmt(x, precision):
    return f"{x:.{precision}g}"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, default=_json_default) + "\n")


def _run_config(args) -> dict:
    skip = {"config", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _ode_config(args) -> ode.OdeConfig:
    return ode.OdeConfig(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        r_max=args.rmax,
        series_radius=args.series_radius,
        output_step=args.output_step,
    ).validate()


def _params(n) -> geometry.ModelParams:
    try:
        return geometry.ModelParams(n)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _warp(spec: str, n: int) -> geometry.WarpingFunction:
    try:
        return geometry.parse_warp(spec, n)
    except (DomainError, OSError) as exc:
        raise UsageError(f"bad warp {spec!r}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _classification_dict(cls: analysis.SolutionClass) -> dict:
    return {"class": cls.kind.value, "witness_r": cls.witness}


def _completeness_dict(rep: analysis.CompletenessReport) -> dict:
    return {
        "length_numeric": rep.length_numeric,
        "length_total": rep.length_total,
        "tail_rate": rep.tail_rate,
        "verdict": rep.verdict.value,
        "reason": rep.reason,
    }


def _fit_dict(fit: analysis.DecayFit | None) -> dict | None:
    if fit is None:
        return None
    return {"c": fit.c, "C_tilde": fit.C_tilde, "C_envelope": fit.C_envelope, "window": list(fit.window),
            "rms_log_residual": fit.rms_log_residual, "samples": fit.samples}


def _analyse(sol: ode.RadialSolution, eq_tol: float, window):
    cls = analysis.classify(sol, eq_tol)
    fit = None
    if cls.kind is analysis.SolutionKind.SUBSOLUTION and sol.termination is ode.Termination.REACHED_RMAX:
        try:
            fit = analysis.decay_fit(sol, tuple(window) if window else None, cls)
        except YamabeError:
            fit = None
    rep = analysis.conformal_length(sol, fit, cls)
    return cls, fit, rep


def _plot_script(path: Path, data_name: str, columns: str, title: str) -> None:
    path.write_text(
        "set datafile separator ','\n"
        f"set title '{title}'\n"
        "set key autotitle columnhead\n"
        f"plot '{data_name}' using {columns} with lines\n"
    )


# -- commands --------------------------------------------------------------

def cmd_solve(args) -> int:
    params = _params(args.n)
    if args.u0 is None:
        raise UsageError("--u0 is required")
    if not args.u0 > 0:
        raise UsageError("u0 must be positive")
    w = _warp(args.warp, params.n)
    sol = ode.integrate(params, w, args.u0, _ode_config(args))
    cls, fit, rep = _analyse(sol, args.eq_tol, args.decay_window)
    out = _out_dir(args)
    sol.write_csv(out / f"{args.name}.csv", args.precision)
    meta = sol.metadata()
    meta.update(
        classification=_classification_dict(cls),
        completeness=_completeness_dict(rep),
        decay_fit=_fit_dict(fit),
        run_config=dict(_run_config(args), command="solve"),
    )
    write_json(out / f"{args.name}.json", meta)
    if args.plot_script:
        _plot_script(out / f"{args.name}.gp", f"{args.name}.csv", "1:2", f"u(r), n={params.n}, u0={args.u0}")
    print(f"termination: {sol.termination.value} at r = {sol.r_stop:.6g}")
    print(f"class: {cls.kind.value}" + (f" (witness r = {cls.witness:.6g})" if cls.witness is not None else ""))
    print(f"completeness: {rep.verdict.value}; length numeric = {rep.length_numeric:.8g}, total = {rep.length_total:.8g}")
    return EXIT_OK


def _u0_grid(args) -> list[float]:
    if args.u0_list:
        return [float(x) for x in args.u0_list]
    if args.u0_min is None or args.u0_max is None or args.count is None:
        raise UsageError("give --u0-list or all of --u0-min, --u0-max, --count")
    if args.count < 1 or not 0 < args.u0_min <= args.u0_max:
        raise UsageError("need count >= 1 and 0 < u0-min <= u0-max")
    grid = np.linspace(args.u0_min, args.u0_max, args.count).tolist()
    if args.include_one and 1.0 not in grid and args.u0_min <= 1.0 <= args.u0_max:
        grid.append(1.0)
    return sorted(grid)


def cmd_sweep(args) -> int:
    params = _params(args.n)
    w = _warp(args.warp, params.n)
    grid = _u0_grid(args)
    if any(not x > 0 for x in grid):
        raise UsageError("u0 values must be positive")
    rows = analysis.sweep(params, w, grid, _ode_config(args), args.eq_tol, workers=args.workers)
    out = _out_dir(args)
    analysis.write_sweep_csv(rows, out / f"{args.name}.csv", args.precision)
    analysis.write_sweep_json(rows, out / f"{args.name}.json", {
        "n": params.n,
        "warp": w.label,
        "run_config": _clean(dict(_run_config(args), command="sweep")),
    })
    counts: dict[str, int] = {}
    for row in rows:
        key = row.classification.kind.value if row.classification else "error"
        counts[key] = counts.get(key, 0) + 1
    print(f"{len(rows)} rows: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    if args.strict:
        bad = [r for r in rows if r.error or r.termination is ode.Termination.STEP_FAILURE]
        if bad:
            print(f"strict: {len(bad)} row(s) failed", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    params = _params(args.n)
    if not args.b >= 1:
        raise UsageError("b must be >= 1")
    n, b = params.n, args.b
    rho = np.linspace(args.rho_min, args.rho_max, args.points)
    hp = closed_forms.HyperbolicFamilyParam(b, params)
    w = geometry.WarpingFunction.scaled_hyperbolic(n)
    checks = {}

    r = closed_forms.rho_to_radius(params, rho)
    res = closed_forms.radial_residual(w, params, *closed_forms.hyperbolic_family_radial_derivs(hp, r), r)
    checks["hyperbolic_residual"] = float(np.max(np.abs(res)))

    with mpmath.workdps(args.digits):
        rho_mp = np.array([mpmath.mpf(float(x)) for x in rho], dtype=object)
        wres = closed_forms.euclidean_residual(params, *closed_forms.euclidean_family_derivs(params, b, rho_mp), rho_mp)
        checks["euclidean_residual"] = float(max(abs(x) for x in wres))
    product = closed_forms.hyperbolic_family(hp, rho) * closed_forms.poincare_factor(params, rho)
    checks["factorization_rel"] = float(np.max(np.abs(product / closed_forms.euclidean_family(params, b, rho) - 1)))

    cfg = ode.OdeConfig(r_max=args.rmax)
    sol = ode.integrate(params, w, closed_forms.family_u0(params, b), cfg)
    exact = closed_forms.hyperbolic_family_radial(hp, sol.r)
    checks["ode_vs_closed_form_rel"] = float(np.max(np.abs(sol.u / exact - 1)))

    limits = {
        "hyperbolic_residual": args.tol,
        "euclidean_residual": args.tol,
        "factorization_rel": 1e-12,
        "ode_vs_closed_form_rel": args.ode_tol,
    }
    ok = all(checks[k] <= limits[k] for k in checks)
    for k in checks:
        print(f"{k:24s} {checks[k]:.3e}  (limit {limits[k]:.0e})  {'ok' if checks[k] <= limits[k] else 'FAIL'}")
    out = _out_dir(args)
    write_json(out / f"{args.name}.json", {
        "family": args.family, "n": n, "b": b, "checks": checks, "limits": limits, "passed": ok,
        "ode_termination": sol.termination.value,
        "run_config": dict(_run_config(args), command="verify"),
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_completeness(args) -> int:
    if not args.solution:
        raise UsageError("--solution is required")
    sol_path = Path(args.solution)
    meta_path = Path(args.meta) if args.meta else sol_path.with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    if args.n is not None:
        meta["n"] = args.n
    if "n" not in meta:
        raise UsageError("dimension unknown: pass --n or a metadata JSON")
    params = _params(meta["n"])
    sol = ode.RadialSolution.read_csv(sol_path, meta, params)
    cls, fit, rep = _analyse(sol, args.eq_tol, args.decay_window)
    out = _out_dir(args)
    write_json(out / f"{args.name}.json", {
        "solution": str(sol_path),
        "n": params.n,
        "classification": _classification_dict(cls),
        "completeness": _completeness_dict(rep),
        "decay_fit": _fit_dict(fit),
        "run_config": dict(_run_config(args), command="completeness"),
    })
    print(f"class: {cls.kind.value}")
    print(f"completeness: {rep.verdict.value}; length numeric = {rep.length_numeric:.8g}, total = {rep.length_total:.8g}")
    return EXIT_OK


def cmd_curvature(args) -> int:
    params = _params(args.n)
    w = _warp(args.warp, params.n)
    r = np.linspace(args.r_min, args.r_max, args.points)
    if r[0] <= 0:
        raise UsageError("--r-min must be positive")
    f, df, d2f = w.eval(r)
    if np.any(f <= 0):
        raise InvariantError(f"warp has f <= 0 at r = {r[np.argmax(f <= 0)]}")
    scal = geometry.scalar_curvature(w, params, r)
    ric = geometry.radial_ricci(w, params, r)
    drift = geometry.drift_coefficient(w, params, r)
    cert = geometry.certify_warp_bounds(w, args.cert_r0, args.cert_rmax, args.samples)
    out = _out_dir(args)
    with (out / f"{args.name}.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["r", "f", "df", "d2f", "scalar_curvature", "radial_ricci", "drift"])
        for row in zip(r, f, df, d2f, scal, ric, drift):
            writer.writerow([_fmt(x, args.precision) for x in row])
    summary = {
        "scalar_curvature_min": float(scal.min()),
        "scalar_curvature_max": float(scal.max()),
        "radial_ricci_min": float(ric.min()),
        "radial_ricci_max": float(ric.max()),
    }
    write_json(out / f"{args.name}.json", {
        "n": params.n, "warp": w.label, "summary": summary, "certificate": cert.to_dict(),
        "run_config": dict(_run_config(args), command="curvature"),
    })
    print(f"scalar curvature in [{summary['scalar_curvature_min']:.12g}, {summary['scalar_curvature_max']:.12g}]")
    print(f"radial Ricci in [{summary['radial_ricci_min']:.12g}, {summary['radial_ricci_max']:.12g}]")
    print(f"|f'/f| <= {cert.C_o:.9g} on [{cert.R_o:g}, {cert.r_max:g}] ({cert.samples} samples); growth_ok = {cert.growth_ok}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def _common(p: argparse.ArgumentParser, name: str) -> None:
    p.add_argument("--config", help="JSON file with option values (flags override)")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--name", default=name, help="basename of the output files")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--precision", type=int, default=17, help="significant digits in CSV output")


def _ode_opts(p: argparse.ArgumentParser, rmax: float) -> None:
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--warp", default="scaled-hyperbolic", help=WARP_HELP)
    p.add_argument("--rmax", type=float, default=rmax)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--series-radius", type=float, default=1e-3)
    p.add_argument("--output-step", type=float, default=0.01)
    p.add_argument("--eq-tol", type=float, default=analysis.EQ_TOL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radial-yamabe", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("solve", help="integrate one radial solution")
    _common(p, "solution")
    _ode_opts(p, 20.0)
    p.add_argument("--u0", type=float)
    p.add_argument("--decay-window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--plot-script", action="store_true", help="also write a gnuplot script")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="classify a grid of central values")
    _common(p, "sweep")
    _ode_opts(p, 20.0)
    p.add_argument("--u0-min", type=float)
    p.add_argument("--u0-max", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--u0-list", type=float, nargs="+")
    p.add_argument("--include-one", action="store_true", help="add u0 = 1 to a linspace grid")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="residual and ODE checks of a closed-form family")
    _common(p, "verify")
    p.add_argument("--family", choices=["hyperbolic", "euclidean"], default="hyperbolic")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--rho-min", type=float, default=0.01)
    p.add_argument("--rho-max", type=float, default=0.95)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--ode-tol", type=float, default=1e-6)
    p.add_argument("--rmax", type=float, default=15.0)
    p.add_argument("--digits", type=int, default=30, help="mpmath digits for the flat-space residual")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("completeness", help="re-analyse a solution CSV")
    _common(p, "completeness")
    p.add_argument("--solution")
    p.add_argument("--meta", help="metadata JSON (default: solution path with .json)")
    p.add_argument("--n", type=int)
    p.add_argument("--eq-tol", type=float, default=analysis.EQ_TOL)
    p.add_argument("--decay-window", type=float, nargs=2, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_completeness)

    p = sub.add_parser("curvature", help="curvature and warp-bound certificate")
    _common(p, "curvature")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--warp", default="scaled-hyperbolic", help=WARP_HELP)
    p.add_argument("--r-min", type=float, default=0.1)
    p.add_argument("--r-max", type=float, default=30.0)
    p.add_argument("--points", type=int, default=300)
    p.add_argument("--cert-r0", type=float, default=3.0)
    p.add_argument("--cert-rmax", type=float, default=30.0)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_curvature)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if "run_config" in doc:
        doc = doc["run_config"]
    if doc.get("command", args.command) != args.command:
        raise UsageError(f"config is for {doc['command']!r}, not {args.command!r}")
    known = set(vars(args))
    unknown = set(doc) - known - {"command"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    # reparse with config values as defaults so explicit flags still win
    parser.subcommands[args.command].set_defaults(**{k: v for k, v in doc.items() if k != "command"})
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except YamabeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
