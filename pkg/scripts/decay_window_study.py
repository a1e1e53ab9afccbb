#!/usr/bin/env python3
"""How the fitted decay rate of u_b approaches (n-2)/(2k) as the fit window moves out.

Fits are done both on the shooting run and on the exact closed form, to show
that any gap on early windows is a property of u_b itself.
"""
import argparse

import numpy as np

from radial_yamabe.analysis import decay_fit
from radial_yamabe.closed_forms import HyperbolicFamilyParam, family_u0, hyperbolic_family_radial
from radial_yamabe.geometry import ModelParams, WarpingFunction
from radial_yamabe.ode import OdeConfig, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", type=float, default=2.0)
    ap.add_argument("--width", type=float, default=6.0)
    ap.add_argument("--starts", type=float, nargs="+", default=[4, 8, 12, 16, 20, 24, 28])
    args = ap.parse_args()
    r_max = max(args.starts) + args.width + 1
    for n in (3, 4):
        params = ModelParams(n)
        target = (n - 2) / (2 * params.hyperbolic_scale)
        sol = integrate(params, WarpingFunction.scaled_hyperbolic(n), family_u0(params, args.b), OdeConfig(r_max=r_max))
        hp = HyperbolicFamilyParam(args.b, params)
        print(f"n = {n}, b = {args.b:g}, asymptotic rate {target:.6f}")
        for lo in args.starts:
            hi = lo + args.width
            fit = decay_fit(sol, (lo, hi))
            r = sol.r[(sol.r >= lo) & (sol.r <= hi)]
            exact_c = -np.polyfit(r, np.log(hyperbolic_family_radial(hp, r)), 1)[0]
            print(f"  [{lo:4.0f}, {hi:4.0f}]  ode {fit.c:.6f} ({fit.c / target - 1:+7.2%})   closed form {exact_c:.6f}")


if __name__ == "__main__":
    main()
