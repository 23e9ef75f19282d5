"""Shape diagnostics: sign series, monotonicity, decay and origin slopes."""

import math

import numpy as np
import pytest

from skyrlab import (
    ModelParams,
    Profile,
    decay_fit,
    diagnostics,
    fprime_identity_gap,
    half_angle_identity_gap,
    make_grid,
    monotonicity_check,
    origin_derivative,
    sign_quantity_check,
    theta,
)


def reference_profile(r, n=1024):
    # sized like a beta ~ 1 run (R = 60); the profile itself is the
    # beta = 0 reference
    g = make_grid(1.0, n, r)
    return Profile(g, theta(g.nodes, r), ModelParams(r, 0.0))


def test_reference_diagnostics_vanish():
    # Q and F are identically zero along theta; the discrete series only
    # carry the h^2 differentiation error of the exported gradient
    prof = reference_profile(1.0)
    d = diagnostics(prof)
    assert np.max(np.abs(d.q[:-1])) <= 2e-5
    assert np.max(np.abs(d.f_fn[:-1])) <= 1e-4
    # at r = 1 the chirality correction cancels Q-bar exactly
    assert np.max(np.abs(d.n_fn[:-1])) <= 2e-5


def test_reference_n_closed_form():
    # N along theta collapses to (r - 1/r)(1 - cos theta), negative for r < 1
    r = 0.5
    prof = reference_profile(r)
    d = diagnostics(prof)
    closed = (r - 1.0 / r) * (1.0 - np.cos(prof.values))
    assert np.max(np.abs(d.n_fn[:-1] - closed[:-1])) <= 1e-4
    assert d.max_n < 0.0


def test_flat_profile_diagnostics():
    g = make_grid(0.7, 512, 1.0)
    p = ModelParams(1.0, 0.7)
    prof = Profile(g, np.zeros(g.n_points), p, origin_value=0.0)
    d = diagnostics(prof)
    for arr in (d.q, d.q_bar, d.n_fn, d.f_fn):
        assert np.all(arr == 0.0)
    assert np.all(d.p_fn == 2.0 * 0.7**2)


def test_monotonicity_solved(solved_1_1, solved_half_half):
    for rep in (solved_1_1, solved_half_half):
        verdict, max_q = monotonicity_check(rep.profile)
        assert verdict
        assert max_q < 0.0


def test_monotonicity_borderline_reads_false():
    # Q vanishes identically on the reference profile, so the strict
    # verdict must land on the non-monotone side
    verdict, max_q = monotonicity_check(reference_profile(1.0))
    assert not verdict
    assert abs(max_q) <= 1e-4


def test_sign_quantity_solved(solved_1_1, solved_half_half):
    assert sign_quantity_check(solved_1_1.profile)
    assert sign_quantity_check(solved_half_half.profile)


def test_sign_quantity_strict_on_flat():
    g = make_grid(0.5, 256, 1.0)
    prof = Profile(g, np.zeros(g.n_points), ModelParams(1.0, 0.5), origin_value=0.0)
    assert not sign_quantity_check(prof)


def test_decay_fit_synthetic():
    # log(sqrt(rho) f) is exactly linear for f = exp(-0.7 rho)/sqrt(rho)
    g = make_grid(0.5, 2048, 1.0)
    vals = np.exp(-0.7 * g.nodes) / np.sqrt(g.nodes)
    prof = Profile(g, vals, ModelParams(1.0, 0.5))
    fit = decay_fit(prof)
    assert abs(fit.value - 0.7) <= 1e-6
    assert fit.stderr <= 1e-6
    assert fit.n_points >= 4
    assert fit.window[1] <= 0.9 * g.r_max


def test_decay_fit_algebraic_tail_reads_zero():
    # theta decays like 4r/rho; on a long grid the fitted exponential
    # rate must come out near zero, clearly separated from sqrt(2) beta
    g = make_grid(0.05, 2048, 1.0)
    prof = Profile(g, theta(g.nodes, 1.0), ModelParams(1.0, 0.0))
    fit = decay_fit(prof)
    assert abs(fit.value) <= 5e-3


def test_decay_solved(solved_1_half, solved_1_1):
    for rep in (solved_1_half, solved_1_1):
        beta = rep.profile.params.beta
        fit = decay_fit(rep.profile)
        nominal = math.sqrt(2.0) * beta
        assert abs(fit.value - nominal) / nominal <= 0.15


def test_decay_fit_unresolved_tail():
    g = make_grid(1.0, 1024, 1.0)
    prof = Profile(g, theta(g.nodes, 1.0), ModelParams(1.0, 1.0))
    with pytest.raises(ValueError, match="tail not resolved"):
        decay_fit(prof)


def test_decay_fit_nonpositive_tail():
    g = make_grid(1.0, 1024, 1.0)
    vals = np.full(g.n_points, 5e-3)
    vals[500] = -1e-5
    prof = Profile(g, vals, ModelParams(1.0, 1.0), origin_value=0.0)
    with pytest.raises(ValueError, match="non-positive tail"):
        decay_fit(prof)


def test_origin_derivative_reference():
    for r in (1.0, 0.5):
        prof = reference_profile(r)
        assert abs(origin_derivative(prof) + 1.0 / r) <= 1e-6


def test_origin_derivative_needs_resolution():
    g = make_grid(1.0, 64, 1.0)
    prof = Profile(g, theta(g.nodes, 0.005), ModelParams(0.005, 1.0))
    with pytest.raises(ValueError, match="insufficient resolution"):
        origin_derivative(prof)


def test_origin_derivative_solved_stable(solved_1_half, solved_1_half_fine):
    a = origin_derivative(solved_1_half.profile)
    b = origin_derivative(solved_1_half_fine.profile)
    assert a < 0.0
    assert abs(a - b) / abs(b) <= 0.02


def test_fprime_identity(solved_1_half, solved_1_half_fine):
    gap_coarse = fprime_identity_gap(solved_1_half.profile)
    gap_fine = fprime_identity_gap(solved_1_half_fine.profile)
    assert gap_coarse <= 5e-3
    assert 3.0 <= gap_coarse / gap_fine <= 5.5


def test_half_angle_identity(solved_1_1):
    # holds for any admissible profile, not just critical points
    assert half_angle_identity_gap(solved_1_1.profile) <= 1e-10
    g = make_grid(0.3, 512, 1.0)
    rng = np.random.default_rng(5)
    z = np.zeros(g.n_points)
    logr = np.log(g.nodes)
    for _ in range(3):
        c = rng.uniform(-1.5, 2.5)
        w = rng.uniform(0.3, 0.8)
        z += rng.normal() * np.exp(-0.5 * ((logr - c) / w) ** 2)
    u = 1.0 / (1.0 + np.exp(-z))
    prof = Profile(g, u * theta(g.nodes, 1.0), ModelParams(1.0, 0.3))
    assert half_angle_identity_gap(prof) <= 1e-10
