"""Numerical laboratory for equivariant chiral skyrmion profiles.

Solves the reduced radial Euler-Lagrange equation of the planar
DMI-anisotropy energy, minimizes the energy under pointwise bounds,
and checks shape, decay, spectral stability, and resolvent growth of
the solutions against their analytic predictions.
"""

from .energy import (
    EnergyBreakdown,
    convexity_gap,
    energy,
    first_variation,
    topological_degree,
    truncated_theta,
    truncated_theta_profile,
)
from .radial import (
    HKPoint,
    ModelParams,
    Profile,
    RadialGrid,
    ThetaProfile,
    grid_gradient,
    hk_to_params,
    make_grid,
    params_to_hk,
    theta,
    theta_sin,
    x_norm,
)
from .shape import (
    DiagnosticsSeries,
    FitResult,
    decay_fit,
    diagnostics,
    fprime_identity_gap,
    half_angle_identity_gap,
    monotonicity_check,
    origin_derivative,
    sign_quantity_check,
)
from .solver import (
    SolveReport,
    SolverConfig,
    difference_sweep,
    el_residual,
    minimize_constrained,
    pool_map,
    scaled_residual_norm,
    solve_continuation,
    solve_newton,
)
from .spectral import (
    LinearizedOperator,
    ModeOperator,
    SpectralEntry,
    a_block_apply,
    assemble_linearized,
    assemble_mode,
    instability_direction,
    min_eigenpairs,
    mode_form_value,
    mode_monotonicity_probe,
    resolvent_probe,
)
from .verify import CheckResult, run_all, run_suite

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "DiagnosticsSeries",
    "EnergyBreakdown",
    "FitResult",
    "HKPoint",
    "LinearizedOperator",
    "ModeOperator",
    "ModelParams",
    "Profile",
    "RadialGrid",
    "SolveReport",
    "SolverConfig",
    "SpectralEntry",
    "ThetaProfile",
    "a_block_apply",
    "assemble_linearized",
    "assemble_mode",
    "convexity_gap",
    "decay_fit",
    "diagnostics",
    "difference_sweep",
    "el_residual",
    "energy",
    "first_variation",
    "fprime_identity_gap",
    "grid_gradient",
    "half_angle_identity_gap",
    "hk_to_params",
    "instability_direction",
    "make_grid",
    "min_eigenpairs",
    "minimize_constrained",
    "mode_form_value",
    "mode_monotonicity_probe",
    "monotonicity_check",
    "origin_derivative",
    "params_to_hk",
    "pool_map",
    "resolvent_probe",
    "run_all",
    "run_suite",
    "scaled_residual_norm",
    "sign_quantity_check",
    "solve_continuation",
    "solve_newton",
    "theta",
    "theta_sin",
    "topological_degree",
    "truncated_theta",
    "truncated_theta_profile",
    "x_norm",
    "__version__",
]
