"""Positive radial solutions of ``Lap_g u + c_n u = c_n u^{(n+2)/(n-2)}`` on warped products."""
from .analysis import (
    BarrierFit,
    CompletenessReport,
    DecayFit,
    SolutionClass,
    SolutionKind,
    Verdict,
    barrier_fit,
    classify,
    conformal_length,
    decay_fit,
    integral_ratio_check,
    sweep,
)
from .closed_forms import (
    HyperbolicFamilyParam,
    conformal_identity_check,
    euclidean_family,
    euclidean_residual,
    hyperbolic_family,
    hyperbolic_family_radial,
    poincare_factor,
    radial_residual,
    radius_to_rho,
)
from .geometry import (
    ModelParams,
    WarpingFunction,
    certify_warp_bounds,
    drift_coefficient,
    model_params,
    radial_ricci,
    scalar_curvature,
    warp_eval,
)
from .ode import OdeConfig, RadialSolution, Termination, integrate, series_start, solution_at

__version__ = "0.1.0"

__all__ = [
    "BarrierFit",
    "CompletenessReport",
    "DecayFit",
    "SolutionClass",
    "SolutionKind",
    "Verdict",
    "barrier_fit",
    "classify",
    "conformal_length",
    "decay_fit",
    "integral_ratio_check",
    "sweep",
    "HyperbolicFamilyParam",
    "conformal_identity_check",
    "euclidean_family",
    "euclidean_residual",
    "hyperbolic_family",
    "hyperbolic_family_radial",
    "poincare_factor",
    "radial_residual",
    "radius_to_rho",
    "ModelParams",
    "WarpingFunction",
    "certify_warp_bounds",
    "drift_coefficient",
    "model_params",
    "radial_ricci",
    "scalar_curvature",
    "warp_eval",
    "OdeConfig",
    "RadialSolution",
    "Termination",
    "integrate",
    "series_start",
    "solution_at",
]
