#!/usr/bin/env python3
"""Trichotomy sweep over central values, with a short text summary.

    python scripts/run_sweep.py --n 3 --warp scaled-hyperbolic --count 40 --out out/sweep
"""
import argparse
from collections import Counter
from pathlib import Path

import numpy as np

from radial_yamabe.analysis import sweep, write_sweep_csv, write_sweep_json
from radial_yamabe.geometry import ModelParams, parse_warp
from radial_yamabe.ode import OdeConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--warp", default="scaled-hyperbolic")
    ap.add_argument("--u0-min", type=float, default=0.1)
    ap.add_argument("--u0-max", type=float, default=2.0)
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--rmax", type=float, default=20.0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out/sweep", help="output path prefix")
    args = ap.parse_args()

    params = ModelParams(args.n)
    w = parse_warp(args.warp, args.n)
    grid = sorted(set(np.linspace(args.u0_min, args.u0_max, args.count).tolist()) | {1.0})
    rows = sweep(params, w, grid, OdeConfig(r_max=args.rmax), workers=args.workers)

    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, prefix.with_suffix(".csv"))
    write_sweep_json(rows, prefix.with_suffix(".json"), {"n": args.n, "warp": w.label, "r_max": args.rmax})

    counts = Counter((r.classification.kind.value, r.completeness.verdict.value) if r.classification else ("error", "-")
                     for r in rows)
    print(f"{len(rows)} rows on {w.label}, n = {args.n}, r_max = {args.rmax:g}")
    for (kind, verdict), k in sorted(counts.items()):
        print(f"  {kind:14s} {verdict:13s} {k}")


if __name__ == "__main__":
    main()
