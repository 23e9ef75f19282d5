"""Named invariant suites: each check returns a measured value and verdict.

The suites package the quantitative claims scattered through the other
modules into self-contained runs: closed-form identities of the
reference profile, energy anchors of the truncated reference family,
solver cross-validation, shape laws (decay, monotonicity, the
structured first-order identity), sector-form spectra, and resolvent
growth exponents.  Every check is deterministic for a fixed seed and
sized to run on one core in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import energy, topological_degree, truncated_theta_profile
from .radial import (
    ModelParams,
    Profile,
    ThetaProfile,
    grid_gradient,
    make_grid,
    theta,
    theta_sin,
    x_norm,
)
from .shape import (
    decay_fit,
    fprime_identity_gap,
    monotonicity_check,
    sign_quantity_check,
)
from .solver import SolverConfig, minimize_constrained, solve_continuation
from .spectral import (
    a_block_apply,
    assemble_linearized,
    assemble_mode,
    instability_direction,
    min_eigenpairs,
    mode_form_value,
    mode_monotonicity_probe,
    resolvent_probe,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "run_all"]

SUITES = ("identities", "energy", "solver", "shape", "spectral", "resolvent")


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _leq(name: str, measured: float, tol: float) -> CheckResult:
    return CheckResult(name, float(measured), float(tol), bool(measured <= tol))


def _within(name: str, measured: float, lo: float, hi: float) -> CheckResult:
    # encoded as distance to the admissible interval, tolerance zero
    dist = max(lo - measured, measured - hi, 0.0)
    return CheckResult(name, float(measured), float(hi), bool(dist == 0.0))


def _flag(name: str, ok: bool) -> CheckResult:
    return CheckResult(name, 1.0 if ok else 0.0, 1.0, bool(ok))


def _suite_identities(seed: int) -> list:
    checks = []
    for r in (0.25, 1.0, 2.0):
        rho = np.geomspace(1e-3, 1e3, 100)
        th = theta(rho, r)
        sn = theta_sin(rho, r)
        cos_gap = float(np.max(np.abs(np.cos(th) - (rho**2 - 4 * r**2) / (rho**2 + 4 * r**2))))
        sin_gap = float(np.max(np.abs(sn - 4 * r * rho / (rho**2 + 4 * r**2))))
        # the closed-form slope of 2 arctan(2r/rho) must equal -sin/rho
        der_gap = float(np.max(np.abs(-4 * r / (rho**2 + 4 * r**2) + sn / rho)))
        atan_gap = float(np.max(np.abs(th - 2.0 * np.arctan2(2 * r, rho))))
        checks.append(_leq(f"theta_cos_form_r{r:g}", cos_gap, 1e-12))
        checks.append(_leq(f"theta_sin_form_r{r:g}", sin_gap, 1e-12))
        checks.append(_leq(f"theta_slope_form_r{r:g}", der_gap, 1e-12))
        checks.append(_leq(f"theta_atan_form_r{r:g}", atan_gap, 1e-12))
    return checks


def _anchor_errors():
    """Truncated reference energies at r=1 for growing truncation radii."""
    out = {}
    for R in (50.0, 100.0, 200.0, 400.0):
        g = make_grid(0.05, 4096, 1.0, r_max=2.0 * R)
        prof = truncated_theta_profile(g, ModelParams(r=1.0, beta=0.0), R)
        out[R] = energy(prof)
    return out


def _suite_energy(seed: int) -> list:
    checks = []
    e = _anchor_errors()
    err = {R: (abs(e[R].dirichlet - 2.0), abs(e[R].dmi + 8.0), abs(e[R].v_minus - 4.0)) for R in e}
    for j, nm in enumerate(("dirichlet_to_2", "dmi_to_minus8", "vminus_to_4")):
        checks.append(_leq(f"{nm}_at_R400", err[400.0][j], 5e-3))
        ratio = err[100.0][j] / err[200.0][j]
        checks.append(_within(f"{nm}_R2_ratio", ratio, 3.2, 4.8))
    incs = [e[100.0].v_plus - e[50.0].v_plus,
            e[200.0].v_plus - e[100.0].v_plus,
            e[400.0].v_plus - e[200.0].v_plus]
    spread = (max(incs) - min(incs)) / abs(np.mean(incs))
    checks.append(_leq("vplus_log_increment_spread", spread, 0.10))
    total_gap = abs(e[400.0].dirichlet + e[400.0].dmi + e[400.0].v_minus - (2.0 - 4.0))
    checks.append(_leq("reference_total_2_minus_4r2", total_gap, 5e-3))
    return checks


def _suite_solver(seed: int) -> list:
    checks = []
    p = ModelParams(r=1.0, beta=3.0)
    rep = solve_continuation(p)
    checks.append(_flag("solve_r1_b3_converged", rep.converged))
    checks.append(_leq("solve_r1_b3_residual", rep.residual_norm, 1e-10))
    checks.append(_flag("solve_r1_b3_interior", rep.strictly_interior))
    checks.append(_leq("solve_r1_b3_degree", abs(topological_degree(rep.profile) + 1.0), 1e-6))
    e_tot = energy(rep.profile).total
    checks.append(_leq("solve_r1_b3_energy_below_2", e_tot, 2.0))
    grid = rep.profile.grid
    lo = Profile(grid=grid, values=np.zeros(grid.n_points), params=p)
    up = Profile(grid=grid, values=theta(grid.nodes, 1.0), params=p)
    rep_pg = minimize_constrained(p, lo, up)
    gap = x_norm(grid, rep.profile.values - rep_pg.profile.values)
    checks.append(_leq("newton_vs_constrained_xnorm", gap, 1e-5))
    return checks


def _suite_shape(seed: int) -> list:
    checks = []
    for beta in (0.5, 1.0):
        rep = solve_continuation(ModelParams(r=1.0, beta=beta))
        rate = decay_fit(rep.profile).value
        target = math.sqrt(2.0) * beta
        checks.append(_leq(f"decay_rate_b{beta:g}_rel_gap", abs(rate / target - 1.0), 0.15))
    for r in (0.5, 1.0):
        for beta in (0.5, 1.0):
            rep = solve_continuation(ModelParams(r=r, beta=beta))
            mono, max_q = monotonicity_check(rep.profile)
            checks.append(_flag(f"monotone_r{r:g}_b{beta:g}", mono))
            checks.append(_flag(f"sign_quantity_r{r:g}_b{beta:g}", sign_quantity_check(rep.profile)))
    rep_h = solve_continuation(ModelParams(r=1.0, beta=0.5))
    gap_h = fprime_identity_gap(rep_h.profile)
    rep_2h = solve_continuation(ModelParams(r=1.0, beta=0.5), cfg=SolverConfig(n_points=2048))
    gap_2h = fprime_identity_gap(rep_2h.profile)
    checks.append(_leq("fprime_identity_gap", gap_h, 5e-3))
    checks.append(_within("fprime_identity_halving_ratio", gap_h / gap_2h, 3.0, 5.5))
    return checks


def _suite_spectral(seed: int) -> list:
    checks = []
    rep = solve_continuation(ModelParams(r=0.5, beta=0.5), cfg=SolverConfig(n_points=2048))
    op0 = assemble_mode(0, rep.profile)
    lam_a = min_eigenpairs(op0, 1, block="a").lambda_min
    lam_b = min_eigenpairs(op0, 1, block="b").lambda_min
    e1 = min_eigenpairs(assemble_mode(1, rep.profile), 1)
    e2 = min_eigenpairs(assemble_mode(2, rep.profile), 1)
    checks.append(_leq("a_block_lambda_min", -lam_a, 1e-6))
    checks.append(_leq("b_block_lambda_min", -lam_b, 1e-6))
    checks.append(_leq("mode1_lambda_min", -e1.lambda_min, 1e-6))
    checks.append(_leq("mode2_lambda_min", -e2.lambda_min, 1e-6))
    checks.append(_within("mode1_zero_window", e1.lambda_min, -1e-6, 1e-3))
    checks.append(_leq("zero_mode_residual", e1.zero_mode_residual, 1e-6))
    checks.append(_flag("mode_monotonicity_100", mode_monotonicity_probe(rep.profile, 4, 100, seed=seed)))

    rels = []
    for npts in (1024, 2048):
        rp = solve_continuation(ModelParams(r=0.5, beta=0.5), cfg=SolverConfig(n_points=npts))
        g = rp.profile.grid
        op = assemble_mode(0, rp.profile)
        sf = np.sin(rp.profile.values)
        lhs = a_block_apply(op, sf)
        fp = grid_gradient(g, rp.profile.values, rp.profile.origin_value)
        rhs = -2.0 * 0.5 * fp * sf
        w = g.weights[:-1]
        rels.append(
            math.sqrt(float(np.sum(w * (lhs[:-1] - rhs[:-1]) ** 2)))
            / math.sqrt(float(np.sum(w * rhs[:-1] ** 2)))
        )
    checks.append(_leq("operator_identity_rel", rels[0], 5e-3))
    checks.append(_within("operator_identity_halving", rels[0] / rels[1], 3.0, 5.5))

    g8 = make_grid(0.05, 8192, 1.0)
    prof_t = ThetaProfile(r=1.0).profile(g8, beta=0.0)
    a = theta_sin(g8.nodes, 1.0)
    anchor = mode_form_value(assemble_mode(0, prof_t), a, np.zeros_like(a))
    checks.append(_leq("a_form_reference_anchor_8", abs(anchor - 8.0), 1e-3))

    rep_u = solve_continuation(ModelParams(r=1.5, beta=0.05))
    worst = min(
        min_eigenpairs(assemble_mode(n, rep_u.profile), 1).lambda_min for n in range(4)
    )
    checks.append(_leq("instability_r1.5_b0.05", worst, -1e-3))
    n_dir, _, lam_dir = instability_direction(rep_u.profile)
    checks.append(_leq("instability_direction_value", lam_dir, -1e-6))
    return checks


def _suite_resolvent(seed: int) -> list:
    checks = []
    g = make_grid(0.05, 4096, 0.5)
    rho = g.nodes
    betas = list(np.geomspace(0.3, 0.02, 8))
    sources = [
        np.exp(-rho),
        np.exp(-0.5 * (np.log(rho) - 1.0) ** 2),
        rho * np.exp(-rho * rho),
    ]
    xi0 = np.zeros_like(rho)
    checks.append(_leq("growth_s0_xi0", resolvent_probe(0.5, xi0, betas, 0.0, sources, g).value, 1.1))
    checks.append(_leq("growth_s1_xi0", resolvent_probe(0.5, xi0, betas, 1.0, sources, g).value, 0.1))

    rep = solve_continuation(ModelParams(r=0.5, beta=0.1))
    fg = rep.profile.grid
    xi = np.interp(rho, fg.nodes, rep.profile.values - theta(fg.nodes, 0.5), right=0.0)
    checks.append(_leq("solved_correction_xnorm", x_norm(g, xi), 0.5))
    checks.append(_leq("growth_s0_xi_solved", resolvent_probe(0.5, xi, betas, 0.0, sources, g).value, 1.1))
    checks.append(_leq("growth_s1_xi_solved", resolvent_probe(0.5, xi, betas, 1.0, sources, g).value, 0.1))

    beta_f = 0.3
    op = assemble_linearized(xi0, beta_f, 0.5, g)
    b3 = np.zeros((3, g.n_points))
    b3[1] = op.matrix[0]
    b3[2] = op.matrix[1]
    from .spectral import _band_matvec

    rng = np.random.default_rng(seed)
    w = g.weights
    ritz_min = math.inf
    for _ in range(50):
        v = rng.normal(size=g.n_points)
        ritz_min = min(ritz_min, float(v @ _band_matvec(b3, v)) / float(np.sum(w * v * v)))
    checks.append(_flag("ritz_floor_beta_sq", ritz_min >= beta_f**2 * (1.0 - 1e-6)))

    # sum-of-squares potential equals 1/rho^2 plus the attractive well
    th = theta(rho, 0.5)
    v_split = (np.cos(th) ** 2 - np.sin(th) ** 2) / rho**2
    v_ref = 1.0 / rho**2 - 32.0 * 0.25 / (rho**2 + 1.0) ** 2
    split_gap = float(np.max(np.abs(v_split - v_ref) * rho**2))
    checks.append(_leq("fstar_f_splitting", split_gap, 1e-12))
    half = 0.5 * op.xi_bar**2
    well_gap = float(np.max(np.abs(half - 8.0 * 0.25 / (rho**2 + 1.0))))
    checks.append(_leq("xi_bar_well_xi0", well_gap, 1e-13))
    return checks


_RUNNERS = {
    "identities": _suite_identities,
    "energy": _suite_energy,
    "solver": _suite_solver,
    "shape": _suite_shape,
    "spectral": _suite_spectral,
    "resolvent": _suite_resolvent,
}


def run_suite(name: str, seed: int = 42) -> list:
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return _RUNNERS[name](seed)


def run_all(seed: int = 42) -> dict:
    return {name: run_suite(name, seed) for name in SUITES}
