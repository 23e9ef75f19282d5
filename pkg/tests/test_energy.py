"""Reduced functionals, anchors of the truncated reference family, variation,
degree, and the convexity ratio."""

import math

import numpy as np
import pytest

from skyrlab import (
    ModelParams,
    Profile,
    ThetaProfile,
    convexity_gap,
    el_residual,
    energy,
    first_variation,
    make_grid,
    scaled_residual_norm,
    theta,
    topological_degree,
    truncated_theta,
    truncated_theta_profile,
)


def random_admissible(grid, rng, params):
    """Smooth profile strictly inside the box 0 < f < theta."""
    z = np.zeros(grid.n_points)
    for _ in range(3):
        mu = rng.uniform(-1.5, 2.5)
        sig = rng.uniform(0.3, 0.8)
        z += rng.normal() * np.exp(-0.5 * ((np.log(grid.nodes) - mu) / sig) ** 2)
    u = 1.0 / (1.0 + np.exp(-z))
    return Profile(grid, u * theta(grid.nodes, params.r), params)


def test_zero_profile_energy_is_zero():
    g = make_grid(1.0, 256, 1.0)
    prof = Profile(g, np.zeros(g.n_points), ModelParams(1.0, 0.7), origin_value=0.0)
    e = energy(prof)
    assert (e.dirichlet, e.dmi, e.v_minus, e.v_plus, e.total) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_total_is_stated_combination():
    g = make_grid(1.0, 512, 1.0)
    rng = np.random.default_rng(8)
    for _ in range(10):
        p = ModelParams(float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.0, 3.0)))
        e = energy(random_admissible(g, rng, p))
        combo = e.dirichlet + p.r * e.dmi + e.v_minus + p.beta**2 * e.v_plus
        assert abs(e.total - combo) <= 1e-14 * max(1.0, abs(e.total))


def anchor_energies():
    out = {}
    for R in (50.0, 100.0, 200.0, 400.0):
        g = make_grid(0.05, 4096, 1.0, r_max=2.0 * R)
        out[R] = energy(truncated_theta_profile(g, ModelParams(1.0, 0.0), R))
    return out


def test_truncated_reference_anchors():
    # r=1 limits: D -> 2 and H -> -8 exactly as in the competitor
    # construction; the quartic well integrates to 4r^2 = 4 (the integrand is
    # (2r sin(theta)/rho)^2 / 2 by the third identity).  Truncation error is
    # O(1/R^2), so halving R quadruples each gap.
    e = anchor_energies()
    errs = {
        R: (abs(e[R].dirichlet - 2.0), abs(e[R].dmi + 8.0), abs(e[R].v_minus - 4.0))
        for R in e
    }
    for j in range(3):
        assert errs[400.0][j] <= 5e-3
        assert 3.2 <= errs[100.0][j] / errs[200.0][j] <= 4.8
    # E_0[theta-family] -> D + rH + V- = 2 - 4 r^2
    assert abs(e[400.0].dirichlet + e[400.0].dmi + e[400.0].v_minus - (-2.0)) <= 5e-3


def test_truncated_reference_vplus_log_growth():
    # V+ grows like 16 r^2 log R: doubling R adds the same increment
    e = anchor_energies()
    incs = [
        e[100.0].v_plus - e[50.0].v_plus,
        e[200.0].v_plus - e[100.0].v_plus,
        e[400.0].v_plus - e[200.0].v_plus,
    ]
    mean = float(np.mean(incs))
    assert (max(incs) - min(incs)) / abs(mean) <= 0.10
    assert abs(mean - 16.0 * math.log(2.0)) / (16.0 * math.log(2.0)) <= 0.10


def test_lower_bound_large_beta():
    # total >= (1 - 4r^2/beta^2) D + V- + beta^2 V+/2 for beta > 2r
    g = make_grid(1.0, 1024, 1.0)
    rng = np.random.default_rng(42)
    for _ in range(50):
        beta = float(2.0 + 0.5 + 2.0 * rng.random())
        p = ModelParams(1.0, beta)
        e = energy(random_admissible(g, rng, p))
        lower = (1.0 - 4.0 / beta**2) * e.dirichlet + e.v_minus + 0.5 * beta**2 * e.v_plus
        assert e.total >= lower - 1e-8


def test_schwarz_inequality():
    # H^2 <= 8 D V-; discrete Cauchy-Schwarz, so only roundoff slack is needed
    g = make_grid(1.0, 1024, 1.0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = ModelParams(float(rng.uniform(0.3, 2.0)), 0.0)
        e = energy(random_admissible(g, rng, p))
        assert e.dmi**2 <= 8.0 * e.dirichlet * e.v_minus * (1.0 + 1e-10)


def test_energy_refinement_consistency():
    vals = []
    for n in (1024, 2048, 4096):
        g = make_grid(1.0, n, 1.0, r_max=60.0)
        vals.append(energy(truncated_theta_profile(g, ModelParams(1.0, 0.5), 20.0)).total)
    # second-order convergence: consecutive differences shrink 4x
    ratio = abs(vals[0] - vals[1]) / abs(vals[1] - vals[2])
    assert 3.0 <= ratio <= 5.5


def test_energy_tail_guard():
    g = make_grid(1.0, 256, 1.0)
    prof = Profile(g, np.ones(g.n_points), ModelParams(1.0, 1.0), origin_value=1.0)
    with pytest.raises(ValueError, match="tail not resolved"):
        energy(prof)


def test_first_variation_at_pi():
    # sin(pi) rounds to ~1e-16 and the second-difference stencils scale like
    # 1/h^2 at the innermost cells, so "zero" means 1e-9 here, not 1e-14
    g = make_grid(1.0, 1024, 1.0)
    prof = Profile(g, np.full(g.n_points, math.pi), ModelParams(1.0, 1.0))
    assert np.max(np.abs(first_variation(prof))) <= 1e-9


def test_first_variation_theta_small():
    sups = []
    for n in (1024, 2048):
        g = make_grid(1.0, n, 1.0)
        prof = ThetaProfile(1.0).profile(g, beta=0.0)
        sups.append(scaled_residual_norm(g, first_variation(prof)))
    assert sups[0] <= 1e-5
    assert 3.2 <= sups[0] / sups[1] <= 4.8


def test_first_variation_beta_term():
    # the beta^2 sin f (1 + cos f) term is the only difference between the
    # beta = 1 and beta = 0 residuals, pointwise to roundoff
    g = make_grid(1.0, 1024, 1.0)
    tp = ThetaProfile(1.0)
    fv0 = first_variation(tp.profile(g, beta=0.0))
    fv1 = first_variation(tp.profile(g, beta=1.0))
    th = theta(g.nodes, 1.0)[:-1]
    assert np.max(np.abs(fv1 - fv0 - np.sin(th) * (1.0 + np.cos(th)))) <= 1e-13


def test_first_variation_matches_el_residual():
    g = make_grid(1.0, 1024, 1.0)
    rng = np.random.default_rng(11)
    prof = random_admissible(g, rng, ModelParams(0.8, 1.3))
    fv = first_variation(prof)
    res = el_residual(prof)
    assert fv.shape == res.shape
    assert np.max(np.abs(fv - res)) <= 1e-14 * max(1.0, np.max(np.abs(fv)))


def test_topological_degree():
    g = make_grid(1.0, 1024, 1.0)
    prof_t = ThetaProfile(1.0).profile(g)
    # theta carries the full winding; the grid only truncates the 4r^2/R^2 tail
    assert abs(topological_degree(prof_t) + 1.0) <= 2e-3
    zero = Profile(g, np.zeros(g.n_points), ModelParams(1.0), origin_value=0.0)
    assert topological_degree(zero) == 0.0


def test_topological_degree_solved(solved_1_3):
    assert abs(topological_degree(solved_1_3.profile) + 1.0) <= 1e-6


def test_topological_degree_unsettled():
    g = make_grid(1.0, 256, 1.0)
    prof = Profile(g, np.full(g.n_points, 1.2), ModelParams(1.0), origin_value=1.2)
    with pytest.raises(ValueError, match="boundary not settled"):
        topological_degree(prof)


def test_convexity_gap_positive():
    g = make_grid(1.0, 1024, 1.0)
    th = theta(g.nodes, 1.0)
    for s in (0.8, 0.9, 0.95, 0.99):
        gap = convexity_gap(Profile(g, s * th, ModelParams(1.0)))
        assert gap > 0.0
    squeezed = Profile(g, theta(1.2 * g.nodes, 1.0), ModelParams(1.0))
    assert convexity_gap(squeezed) > 0.0


def test_convexity_gap_degenerate():
    g = make_grid(1.0, 1024, 1.0)
    tp = ThetaProfile(1.0).profile(g)
    with pytest.raises(ValueError, match="ill-conditioned"):
        convexity_gap(tp)
    above = Profile(g, 1.05 * theta(g.nodes, 1.0), ModelParams(1.0))
    with pytest.raises(ValueError, match="admissible"):
        convexity_gap(above)


def test_truncated_theta_shape():
    g = make_grid(1.0, 1024, 1.0)
    cut = 10.0
    vals = truncated_theta(g, 1.0, cut)
    th = theta(g.nodes, 1.0)
    inside = g.nodes <= cut
    outside = g.nodes >= 2.0 * cut
    assert np.array_equal(vals[inside], th[inside])
    assert np.all(vals[outside] == 0.0)
    assert truncated_theta_profile(g, ModelParams(1.0, 0.3), cut).is_admissible(slack=1e-12)
    with pytest.raises(ValueError):
        truncated_theta(g, 1.0, -2.0)
