"""Shared solved profiles.

Each continuation solve costs seconds, and several test modules probe the
same handful of (r, beta) points, so the solves are session scoped.  The
fixture asserts convergence so a solver regression fails loudly here
rather than as a cascade of confusing downstream numbers.
"""

import pytest

from skyrlab import ModelParams, SolveReport, SolverConfig, solve_continuation


def solved(r: float, beta: float, **cfg_kw) -> SolveReport:
    cfg = SolverConfig(**cfg_kw) if cfg_kw else SolverConfig()
    rep = solve_continuation(ModelParams(r=r, beta=beta), cfg)
    assert rep.converged, f"fixture solve (r={r}, beta={beta}) failed to converge"
    return rep


@pytest.fixture(scope="session")
def solved_1_3():
    return solved(1.0, 3.0)


@pytest.fixture(scope="session")
def solved_1_1():
    return solved(1.0, 1.0)


@pytest.fixture(scope="session")
def solved_1_half():
    return solved(1.0, 0.5)


@pytest.fixture(scope="session")
def solved_1_half_fine():
    return solved(1.0, 0.5, n_points=2048)


@pytest.fixture(scope="session")
def solved_half_half():
    return solved(0.5, 0.5)


@pytest.fixture(scope="session")
def solved_half_half_fine():
    return solved(0.5, 0.5, n_points=2048)


@pytest.fixture(scope="session")
def solved_half_1():
    return solved(0.5, 1.0)


@pytest.fixture(scope="session")
def solved_unstable():
    # r > 1 at small beta: the profile exists but is an unstable critical point
    return solved(1.5, 0.05)
