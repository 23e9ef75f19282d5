"""Newton-continuation and constrained-minimization solver behaviour."""

import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from skyrlab import (
    ModelParams,
    Profile,
    SolverConfig,
    difference_sweep,
    el_residual,
    energy,
    first_variation,
    make_grid,
    minimize_constrained,
    pool_map,
    scaled_residual_norm,
    solve_continuation,
    solve_newton,
    theta,
    truncated_theta_profile,
    x_norm,
)


def test_reference_profile_is_critical_at_beta_zero():
    # theta solves the reduced equation exactly when beta = 0; the discrete
    # residual is pure truncation error and halves 4x per refinement
    sups = []
    for n in (1024, 2048):
        g = make_grid(1.0, n, 1.0)
        prof = Profile(g, theta(g.nodes, 1.0), ModelParams(1.0, 0.0))
        sups.append(scaled_residual_norm(g, el_residual(prof)))
    assert sups[0] <= 1e-5
    assert 3.2 <= sups[0] / sups[1] <= 4.8


def test_residual_matches_first_variation(solved_half_half):
    # same quantity, two code paths; the raw pointwise gap near the origin
    # is pure roundoff amplified by the 1/h^2 stencils, so compare in the
    # damped norm
    prof = solved_half_half.profile
    res = el_residual(prof)
    fv = first_variation(prof)
    assert scaled_residual_norm(prof.grid, res - fv) <= 1e-13


def test_solve_r1_b3(solved_1_3):
    rep = solved_1_3
    assert rep.converged
    assert rep.residual_norm <= 1e-10
    assert rep.strictly_interior
    assert energy(rep.profile).total < 2.0
    assert rep.path and rep.path[-1][0] == 3.0


def test_solve_newton_direct():
    # at moderate beta the truncated reference seed sits inside the Newton
    # basin and no continuation is needed
    p = ModelParams(1.0, 0.5)
    g = make_grid(0.5, 1024, 1.0)
    init = truncated_theta_profile(g, p, 10.0)
    rep = solve_newton(p, init)
    assert rep.converged
    assert rep.residual_norm <= 1e-10
    assert rep.iterations <= 10
    assert energy(rep.profile).total < 2.0
    assert rep.method == "newton"
    assert len(rep.path) == 1


def test_strict_interior_bound(solved_1_1, solved_half_half):
    for rep in (solved_1_1, solved_half_half):
        prof = rep.profile
        th = theta(prof.grid.nodes, prof.params.r)
        interior = slice(0, prof.grid.n_points - 1)
        assert np.all(prof.values[interior] > 0.0)
        assert np.all(prof.values[interior] < th[interior])
        assert rep.strictly_interior


def test_newton_vs_constrained_agreement(solved_1_3):
    p = solved_1_3.profile.params
    grid = solved_1_3.profile.grid
    lo = Profile(grid, np.zeros(grid.n_points), p)
    up = Profile(grid, theta(grid.nodes, p.r), p)
    rep_pg = minimize_constrained(p, lo, up)
    assert rep_pg.converged
    gap = x_norm(grid, solved_1_3.profile.values - rep_pg.profile.values)
    assert gap <= 1e-6


def test_constrained_interior_to_tight_bounds(solved_1_3):
    # a large-beta solution is a subsolution for smaller beta, so the
    # (1, 0.5) minimizer must sit strictly between it and theta
    grid = solved_1_3.profile.grid
    p = ModelParams(1.0, 0.5)
    lo = Profile(grid, solved_1_3.profile.values, p)
    up = Profile(grid, theta(grid.nodes, 1.0), p)
    assert np.all(lo.values <= up.values)
    rep = minimize_constrained(p, lo, up)
    assert rep.converged
    v = rep.profile.values
    assert np.min((v - lo.values)[:-1]) > 0.0
    assert np.min((up.values - v)[:-1]) > 0.0


def test_constrained_infeasible_bounds():
    g = make_grid(1.0, 256, 1.0)
    p = ModelParams(1.0, 1.0)
    lo = Profile(g, theta(g.nodes, 1.0), p)
    up = Profile(g, np.zeros(g.n_points), p)
    with pytest.raises(ValueError, match="infeasible"):
        minimize_constrained(p, lo, up)


def test_energy_below_competitor(solved_1_3):
    grid = solved_1_3.profile.grid
    comp = truncated_theta_profile(grid, solved_1_3.profile.params, 5.0 / 3.0)
    assert energy(solved_1_3.profile).total < energy(comp).total


def test_beta_validation():
    with pytest.raises(ValueError):
        ModelParams(r=1.0, beta=-1.0)
    p0 = ModelParams(r=1.0, beta=0.0)
    g = make_grid(1.0, 128, 1.0)
    init = truncated_theta_profile(g, p0, 5.0)
    with pytest.raises(ValueError, match="beta"):
        solve_newton(p0, init)
    with pytest.raises(ValueError, match="beta"):
        solve_continuation(p0)


def test_continuation_deep_chain():
    rep = solve_continuation(ModelParams(1.0, 0.05))
    assert rep.converged
    assert rep.residual_norm <= 1e-10
    assert 12 <= len(rep.path) <= 25
    assert rep.path[-1][0] == 0.05


def test_continuation_short_chain():
    rep = solve_continuation(ModelParams(0.5, 1.0))
    assert rep.converged
    assert len(rep.path) <= 6
    assert rep.path[-1][0] == 1.0


def test_continuation_outside_monotone_regime():
    # r = 2 converges fine; the shape guarantees only cover r <= 1, so the
    # monotone verdict is recorded, not asserted
    from skyrlab import monotonicity_check

    rep = solve_continuation(ModelParams(2.0, 0.02))
    assert rep.converged
    assert rep.residual_norm <= 1e-10
    verdict, max_q = monotonicity_check(rep.profile)
    assert isinstance(verdict, bool)
    assert math.isfinite(max_q)


def test_continuation_small_r_retries():
    # the default opening beta overshoots the Newton basin at small r; the
    # start is lowered geometrically until the cold solve lands
    rep = solve_continuation(ModelParams(0.25, 0.3))
    assert rep.converged
    assert rep.residual_norm <= 1e-10


def test_continuation_reports_collapse():
    # past the collapse threshold the minimizing sequence bubbles and no
    # regular profile exists; the solver must say so rather than hand back
    # a grid artifact
    rep = solve_continuation(ModelParams(1.0, 5.0))
    assert not rep.converged
    assert rep.residual_norm > 1e-10


def test_r_max_override():
    cfg = SolverConfig(r_max=20.0)
    rep = solve_continuation(ModelParams(1.0, 1.0), cfg)
    assert rep.converged
    assert rep.profile.grid.r_max == 20.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(continuation_factor=0.3)
    with pytest.raises(ValueError):
        SolverConfig(continuation_factor=0.99)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)
    with pytest.raises(ValueError):
        SolverConfig(newton_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(n_points=32)
    with pytest.raises(ValueError):
        SolverConfig(r_max=-5.0)


def test_coarse_solution_on_fine_grid(solved_1_1):
    # the interpolated coarse solution leaves an O(h^2) residual on the
    # doubled grid; two levels give the ratio
    reps = {1024: solved_1_1}
    for n in (2048, 4096):
        reps[n] = solve_continuation(ModelParams(1.0, 1.0), SolverConfig(n_points=n))
        assert reps[n].converged

    def interp_residual(coarse, fine):
        gc, gf = coarse.profile.grid, fine.profile.grid
        spline = CubicSpline(
            np.concatenate(([0.0], gc.nodes)),
            np.concatenate(([math.pi], coarse.profile.values)),
        )
        moved = Profile(gf, spline(gf.nodes), coarse.profile.params)
        return scaled_residual_norm(gf, el_residual(moved))

    a = interp_residual(reps[1024], reps[2048])
    b = interp_residual(reps[2048], reps[4096])
    assert 3.0 <= a / b <= 5.5


def test_difference_sweep_fit():
    betas = np.geomspace(0.1, 0.4, 5)
    fit = difference_sweep(1.0, betas)
    assert 0.85 <= fit.value <= 1.15
    assert fit.n_points == 5
    assert fit.window == (0.1, 0.4)


def test_difference_sweep_validation():
    with pytest.raises(ValueError):
        difference_sweep(1.0, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        difference_sweep(1.0, [0.0, 0.1, 0.2, 0.3, 0.4])
    with pytest.raises(ValueError):
        difference_sweep(1.0, [0.1, 0.2, 0.3, 0.4, 0.6])


def test_pool_map_order(monkeypatch):
    items = list(range(17))
    expect = [i * i for i in items]
    assert pool_map(lambda i: i * i, items) == expect
    monkeypatch.setenv("SKYRMION_THREADS", "3")
    assert pool_map(lambda i: i * i, items) == expect
    monkeypatch.setenv("SKYRMION_THREADS", "1")
    assert pool_map(lambda i: i * i, items) == expect


def test_scaled_residual_norm_basics():
    g = make_grid(1.0, 128, 1.0)
    assert scaled_residual_norm(g, np.zeros(g.n_points - 1)) == 0.0
    res = np.zeros(g.n_points)
    res[-1] = 2.0
    val = scaled_residual_norm(g, res)
    assert abs(val - 2.0 * g.r_max**2 / (1.0 + g.r_max**2)) <= 1e-12
