"""Reference-profile identities, grids, quadrature, norms, and the (h, k) chart."""

import math

import numpy as np
import pytest

from skyrlab import (
    HKPoint,
    ModelParams,
    Profile,
    ThetaProfile,
    grid_gradient,
    hk_to_params,
    make_grid,
    params_to_hk,
    theta,
    theta_sin,
    x_norm,
)

RS = (0.25, 1.0, 2.0)


def sample_rho(seed: int, lo: float = 1e-2, hi: float = 1e2, n: int = 100) -> np.ndarray:
    # arccos is ill-conditioned where theta approaches pi, so tests that
    # compare library trig against the closed forms stay off the extreme core
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


@pytest.mark.parametrize("r", RS)
def test_theta_closed_form_identities(r):
    rho = sample_rho(42)
    th = theta(rho, r)
    denom = rho * rho + 4.0 * r * r
    assert np.max(np.abs(np.sin(th) - 4.0 * r * rho / denom)) <= 1e-12
    assert np.max(np.abs(np.cos(th) - (rho * rho - 4.0 * r * r) / denom)) <= 1e-12


@pytest.mark.parametrize("r", RS)
def test_theta_third_identity(r):
    # 2r sin(theta)/rho + cos(theta) - 1 telescopes to zero exactly in the
    # rational forms, so the check holds down to the deep core
    rho = sample_rho(43, lo=1e-3)
    tp = ThetaProfile(r)
    combo = 2.0 * r * tp.sin(rho) / rho + tp.cos(rho) - 1.0
    assert np.max(np.abs(combo)) <= 1e-12


@pytest.mark.parametrize("r", RS)
def test_theta_prime_richardson(r):
    # two central-difference levels with the h^2 term eliminated, against
    # the closed-form slope -sin(theta)/rho
    rho = sample_rho(44, lo=5e-2, hi=5e1)
    h = 1e-2 * rho
    d1 = (theta(rho + h, r) - theta(rho - h, r)) / (2.0 * h)
    d2 = (theta(rho + 0.5 * h, r) - theta(rho - 0.5 * h, r)) / h
    extrap = (4.0 * d2 - d1) / 3.0
    exact = -theta_sin(rho, r) / rho
    assert np.max(np.abs(extrap - exact)) <= 1e-8


def test_theta_boundary_values():
    for r in RS:
        assert theta(0.0, r) == math.pi
        assert abs(theta(2.0 * r, r) - 0.5 * math.pi) <= 1e-15
    with pytest.raises(ValueError):
        theta(1.0, -1.0)
    with pytest.raises(ValueError):
        theta(-0.5, 1.0)


def test_theta_profile_consistency():
    tp = ThetaProfile(0.5)
    rho = sample_rho(45, n=30)
    assert np.max(np.abs(np.sin(tp(rho)) - tp.sin(rho))) <= 1e-12
    assert np.max(np.abs(np.cos(tp(rho)) - tp.cos(rho))) <= 1e-12
    assert np.max(np.abs(tp.prime(rho) + tp.sin(rho) / rho)) <= 1e-14
    # slope extends continuously to -1/r at the origin
    assert tp.prime(0.0) == -2.0
    g = make_grid(1.0, 128, 0.5)
    prof = tp.profile(g, beta=0.25)
    assert prof.params.beta == 0.25
    assert np.array_equal(prof.values, theta(g.nodes, 0.5))
    assert prof.is_admissible()


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(r=-1.0, beta=0.5)
    with pytest.raises(ValueError):
        ModelParams(r=0.0, beta=0.5)
    with pytest.raises(ValueError):
        ModelParams(r=1.0, beta=-1.0)
    p = ModelParams(r=1.0)
    assert p.beta == 0.0


def test_make_grid_rules():
    g = make_grid(1.0, 1024, 1.0)
    assert g.r_max == 60.0
    assert g.nodes[0] <= 0.01
    assert g.nodes[-1] == g.r_max
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.weights > 0)
    assert make_grid(0.05, 2048, 1.0).r_max == 600.0
    # beta is floored at 0.05 before the 30/beta rule
    assert make_grid(0.0, 128, 1.0).r_max == 600.0
    assert make_grid(2.0, 128, 1.0).r_max == 60.0
    assert make_grid(1.0, 128, 1.0, r_max=17.5).r_max == 17.5
    with pytest.raises(ValueError):
        make_grid(1.0, 63, 1.0)
    with pytest.raises(ValueError):
        make_grid(1.0, 128, 1.0, r_max=-3.0)


def test_quadrature_constant_exact():
    for beta, n, r in ((1.0, 1024, 1.0), (0.05, 2048, 1.0), (3.0, 512, 0.25)):
        g = make_grid(beta, n, r)
        total = g.integrate(np.ones(g.n_points))
        exact = 0.5 * g.r_max**2
        assert abs(total - exact) <= 1e-12 * exact


def test_quadrature_exponential_second_order():
    # int e^-rho rho drho = 1; the trapezoidal error must drop 4x per doubling
    errs = []
    for n in (1024, 2048):
        g = make_grid(1.0, n, 1.0)
        errs.append(abs(g.integrate(np.exp(-g.nodes)) - 1.0))
    assert errs[0] <= 2e-6
    assert 3.2 <= errs[0] / errs[1] <= 4.8


def test_grid_gradient_second_order():
    errs = []
    for n in (1024, 2048):
        g = make_grid(1.0, n, 1.0)
        f = g.nodes * np.exp(-g.nodes)
        exact = (1.0 - g.nodes) * np.exp(-g.nodes)
        errs.append(np.max(np.abs(grid_gradient(g, f, 0.0) - exact)))
    assert errs[0] <= 1e-4
    assert 3.0 <= errs[0] / errs[1] <= 5.5


def test_x_norm_oracle():
    # || rho e^-rho ||_X^2 = 1/8 + 1/4 analytically
    ref = math.sqrt(3.0 / 8.0)
    errs = []
    for n in (2048, 8192):
        g = make_grid(1.0, n, 1.0)
        errs.append(abs(x_norm(g, g.nodes * np.exp(-g.nodes)) - ref))
    assert errs[0] <= 1e-6
    assert errs[1] <= 1e-7


def test_x_norm_zero_and_mismatch():
    g = make_grid(1.0, 256, 1.0)
    assert x_norm(g, np.zeros(g.n_points)) == 0.0
    th = theta(g.nodes, 1.0)
    assert x_norm(g, th - th) == 0.0
    with pytest.raises(ValueError):
        x_norm(g, np.zeros(g.n_points - 1))


def test_hk_chart_examples():
    hk = params_to_hk(ModelParams(r=1.0, beta=1.0))
    assert (hk.h, hk.k) == (2.0, 0.0)
    hk0 = params_to_hk(ModelParams(r=1.0, beta=0.0))
    assert (hk0.h, hk0.k) == (1.0, -1.0)
    p = hk_to_params(HKPoint(h=4.0, k=0.0), r0=1.0)
    assert abs(p.r - 1.0 / math.sqrt(2.0)) <= 1e-15
    assert abs(p.beta - 1.0) <= 1e-15


def test_hk_chart_round_trip():
    rng = np.random.default_rng(42)
    for _ in range(50):
        p = ModelParams(r=float(rng.uniform(0.1, 3.0)), beta=float(rng.uniform(0.0, 4.0)))
        hk = params_to_hk(p)
        # the inverse normalizes the scale; r0 = r * lam undoes it
        lam = math.sqrt(0.5 * (hk.h - hk.k))
        back = hk_to_params(hk, r0=p.r * lam)
        assert abs(back.r - p.r) <= 1e-14 * max(1.0, p.r)
        assert abs(back.beta - p.beta) <= 1e-14 * max(1.0, p.beta)


def test_hk_chart_domain_errors():
    with pytest.raises(ValueError):
        hk_to_params(HKPoint(h=1.0, k=1.0))
    with pytest.raises(ValueError):
        hk_to_params(HKPoint(h=0.0, k=1.0))
    with pytest.raises(ValueError):
        hk_to_params(HKPoint(h=1.0, k=-3.0))


def test_profile_validation():
    g = make_grid(1.0, 128, 1.0)
    with pytest.raises(ValueError):
        Profile(g, np.zeros(g.n_points - 2), ModelParams(1.0))
    with pytest.raises(ValueError):
        Profile(g, np.full(g.n_points, np.nan), ModelParams(1.0))
    prof = Profile(g, 1.5 * theta(g.nodes, 1.0), ModelParams(1.0))
    assert not prof.is_admissible()
    assert prof.origin_value == math.pi
    shrunk = prof.with_values(0.5 * theta(g.nodes, 1.0))
    assert shrunk.is_admissible()
    assert not shrunk.values.flags.writeable
