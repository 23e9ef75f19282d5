"""Radial grids, quadrature, model parameters, and the reference profile.

Everything downstream lives on a graded one dimensional mesh for the half
line carrying the measure rho d rho.  This module owns mesh and quadrature
construction, the explicit harmonic-map reference profile with its
identities, the equivariant H1 norm, and the (h, k) <-> (r, beta)
parameter charts.  All values are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GRID_GRADING",
    "ModelParams",
    "HKPoint",
    "RadialGrid",
    "Profile",
    "ThetaProfile",
    "make_grid",
    "theta",
    "theta_sin",
    "x_norm",
    "interior_stencils",
    "grid_gradient",
    "params_to_hk",
    "hk_to_params",
]

# Exponent of the mesh stretch.  At 1024 nodes the first node sits near
# r_max * 1e-4, which keeps the 1/rho^2 terms resolved without wasting
# nodes in the exponential tail.
GRID_GRADING = 3.6


def _as_finite_array(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Chirality strength r and anisotropy mix beta.

    beta = 0 is legal for evaluating energies and diagnostics on reference
    profiles; the solvers require beta > 0 because the finite energy class
    is empty at beta = 0.
    """

    r: float
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive and finite, got {self.r!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be nonnegative and finite, got {self.beta!r}")


@dataclass(frozen=True)
class HKPoint:
    """Point in the (h, k) anisotropy chart; h = (beta^2+1)/r^2, k = (beta^2-1)/r^2."""

    h: float
    k: float


def params_to_hk(p: ModelParams) -> HKPoint:
    r2 = p.r * p.r
    b2 = p.beta * p.beta
    return HKPoint(h=(b2 + 1.0) / r2, k=(b2 - 1.0) / r2)


def hk_to_params(hk: HKPoint, r0: float = 1.0) -> ModelParams:
    """Invert the (h, k) chart.

    The scale lam = sqrt((h - k)/2) sends the reference radius r0 to
    r = r0/lam, and beta^2 = (h + k)/(h - k).  Requires h > k (the chart
    degenerates on h = k) and h + k >= 0.
    """
    if not (math.isfinite(hk.h) and math.isfinite(hk.k)):
        raise ValueError("h and k must be finite")
    if not (math.isfinite(r0) and r0 > 0):
        raise ValueError(f"r0 must be positive and finite, got {r0!r}")
    diff = hk.h - hk.k
    if diff <= 0:
        raise ValueError(f"h - k must be positive, got {diff!r}")
    total = hk.h + hk.k
    if total < 0:
        raise ValueError(f"h + k must be nonnegative, got {total!r}")
    lam = math.sqrt(0.5 * diff)
    return ModelParams(r=r0 / lam, beta=math.sqrt(total / diff))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing nodes rho_1 < ... < rho_N = r_max with weights
    for integrals against rho d rho over [0, r_max].

    The origin is a ghost point: node arrays exclude rho = 0 and the
    weights already account for the [0, rho_1] cell (the rho factor kills
    the ghost contribution).  The weights are trapezoidal on the graded
    mesh and telescope, so summing them reproduces r_max^2/2 to roundoff.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r_max: float

    def __post_init__(self) -> None:
        nodes = _as_finite_array("grid nodes", self.nodes)
        weights = _as_finite_array("grid weights", self.weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if nodes[0] <= 0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be positive and strictly increasing")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        r_max = float(self.r_max)
        if not (math.isfinite(r_max) and r_max > 0):
            raise ValueError(f"r_max must be positive and finite, got {r_max!r}")
        if abs(nodes[-1] - r_max) > 1e-12 * r_max:
            raise ValueError("last node must sit at r_max")
        total = float(weights.sum())
        target = 0.5 * r_max * r_max
        if abs(total - target) > 1e-12 * target:
            raise ValueError("weights do not integrate 1 to r_max^2/2")
        nodes = nodes.copy()
        weights = weights.copy()
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "r_max", r_max)

    @property
    def n_points(self) -> int:
        return int(self.nodes.size)

    def nodes_with_origin(self) -> np.ndarray:
        return np.concatenate(([0.0], self.nodes))

    def integrate(self, integrand: np.ndarray) -> float:
        """Quadrature of node samples against rho d rho."""
        integrand = np.asarray(integrand, dtype=float)
        if integrand.shape != self.nodes.shape:
            raise ValueError("integrand does not match the grid")
        return float(np.dot(self.weights, integrand))

    def same_as(self, other: "RadialGrid") -> bool:
        return self.nodes.shape == other.nodes.shape and bool(
            np.array_equal(self.nodes, other.nodes)
        )


def make_grid(
    beta: float,
    n_points: int = 1024,
    r: float = 1.0,
    *,
    r_max: float | None = None,
) -> RadialGrid:
    """Graded mesh whose truncation radius tracks the tail scale of beta.

    r_max follows 30/beta clamped to [60, 2000] (beta floored at 0.05 so
    the Bogomolnyi limit still yields a finite mesh) unless overridden.
    Nodes are the image of a uniform partition of (0, 1] under an
    exponential stretch: dense near the origin for the 1/rho^2 terms,
    mildly stretched in the tail.
    """
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be nonnegative and finite, got {beta!r}")
    if not (math.isfinite(r) and r > 0):
        raise ValueError(f"r must be positive and finite, got {r!r}")
    n_points = int(n_points)
    if n_points < 64:
        raise ValueError(f"n_points must be at least 64, got {n_points}")
    if r_max is None:
        r_max = min(max(30.0 / max(beta, 0.05), 60.0), 2000.0)
    r_max = float(r_max)
    if not (math.isfinite(r_max) and r_max > 0):
        raise ValueError(f"r_max must be positive and finite, got {r_max!r}")

    s = np.arange(1, n_points + 1, dtype=float) / n_points
    nodes = r_max * np.expm1(GRID_GRADING * s) / math.expm1(GRID_GRADING)
    nodes[-1] = r_max
    ext = np.concatenate(([0.0], nodes))
    weights = np.empty(n_points, dtype=float)
    weights[:-1] = 0.5 * nodes[:-1] * (ext[2:] - ext[:-2])
    weights[-1] = 0.5 * nodes[-1] * (nodes[-1] - nodes[-2])
    return RadialGrid(nodes=nodes, weights=weights, r_max=r_max)


def theta(rho, r: float):
    """Harmonic-map reference profile arccos((rho^2 - 4r^2)/(rho^2 + 4r^2)).

    Equal to pi at the origin (the formula itself gives arccos(-1) there)
    and strictly decreasing, with theta(2r) = pi/2.  Accepts scalars or
    arrays of nonnegative radii.
    """
    if not (math.isfinite(r) and r > 0):
        raise ValueError(f"r must be positive and finite, got {r!r}")
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0) or not np.all(np.isfinite(rho_arr)):
        raise ValueError("rho must be finite and nonnegative")
    four_r2 = 4.0 * r * r
    q = (rho_arr * rho_arr - four_r2) / (rho_arr * rho_arr + four_r2)
    out = np.arccos(np.clip(q, -1.0, 1.0))
    return float(out) if np.ndim(rho) == 0 else out


def theta_sin(rho, r: float):
    """sin(theta(rho)) in closed form, 4 r rho / (rho^2 + 4 r^2)."""
    if not (math.isfinite(r) and r > 0):
        raise ValueError(f"r must be positive and finite, got {r!r}")
    rho_arr = np.asarray(rho, dtype=float)
    out = 4.0 * r * rho_arr / (rho_arr * rho_arr + 4.0 * r * r)
    return float(out) if np.ndim(rho) == 0 else out


@dataclass(frozen=True)
class ThetaProfile:
    """The reference profile at scale 2r, with its exact identities."""

    r: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive and finite, got {self.r!r}")

    def __call__(self, rho):
        return theta(rho, self.r)

    def sin(self, rho):
        return theta_sin(rho, self.r)

    def cos(self, rho):
        rho_arr = np.asarray(rho, dtype=float)
        four_r2 = 4.0 * self.r * self.r
        out = (rho_arr * rho_arr - four_r2) / (rho_arr * rho_arr + four_r2)
        return float(out) if np.ndim(rho) == 0 else out

    def prime(self, rho):
        """theta' = -sin(theta)/rho, extended by continuity to -1/r at 0."""
        rho_arr = np.asarray(rho, dtype=float)
        four_r2 = 4.0 * self.r * self.r
        out = -4.0 * self.r / (rho_arr * rho_arr + four_r2)
        return float(out) if np.ndim(rho) == 0 else out

    def on_grid(self, grid: RadialGrid) -> np.ndarray:
        return theta(grid.nodes, self.r)

    def profile(self, grid: RadialGrid, beta: float = 0.0) -> "Profile":
        return Profile(grid=grid, values=self.on_grid(grid), params=ModelParams(self.r, beta))


@dataclass(frozen=True, eq=False)
class Profile:
    """Grid samples of a profile f with the fixed boundary value f(0) = pi.

    The admissible class is the box 0 <= f <= theta; is_admissible checks
    it against the reference profile for the stored r.
    """

    grid: RadialGrid
    values: np.ndarray
    params: ModelParams
    origin_value: float = math.pi

    def __post_init__(self) -> None:
        vals = _as_finite_array("profile values", self.values)
        if vals.shape != self.grid.nodes.shape:
            raise ValueError("profile values do not match the grid")
        if not math.isfinite(self.origin_value):
            raise ValueError("origin value must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def r(self) -> float:
        return self.params.r

    @property
    def beta(self) -> float:
        return self.params.beta

    def theta_values(self) -> np.ndarray:
        return theta(self.grid.nodes, self.params.r)

    def is_admissible(self, slack: float = 0.0) -> bool:
        upper = self.theta_values()
        return bool(
            np.all(self.values >= -slack) and np.all(self.values <= upper + slack)
        )

    def with_values(self, values) -> "Profile":
        return Profile(self.grid, values, self.params, self.origin_value)


def interior_stencils(grid: RadialGrid):
    """Three point derivative weights at the interior nodes rho_1 .. rho_{N-1}.

    Returns ((d1m, d1c, d1p), (d2m, d2c, d2p)) such that
    f'(rho_i) ~ d1m f(left) + d1c f(i) + d1p f(right) and likewise for f'',
    where the left neighbour of the first node is the origin ghost.  The
    first derivative is second order on any mesh; the second derivative is
    second order on the smoothly graded meshes built here.
    """
    x = grid.nodes_with_origin()
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    total = hm + hp
    d1 = (-hp / (hm * total), (hp - hm) / (hm * hp), hm / (hp * total))
    d2 = (2.0 / (hm * total), -2.0 / (hm * hp), 2.0 / (hp * total))
    return d1, d2


def grid_gradient(grid: RadialGrid, values, origin_value: float = 0.0) -> np.ndarray:
    """Second order derivative samples at the nodes.

    Central differences on the nonuniform mesh, one sided at r_max, with
    the origin ghost value prepended so the first node sees the boundary.
    """
    vals = _as_finite_array("gradient input", values)
    if vals.shape != grid.nodes.shape:
        raise ValueError("values do not match the grid")
    x = grid.nodes_with_origin()
    y = np.concatenate(([float(origin_value)], vals))
    return np.gradient(y, x, edge_order=2)[1:]


def x_norm(grid: RadialGrid, values, origin_value: float = 0.0) -> float:
    """Equivariant H1 norm sqrt(int (xi'^2 + xi^2/rho^2) rho d rho).

    The derivative term integrates the piecewise linear interpolant
    exactly on every cell including [0, rho_1]; the 1/rho^2 term uses the
    node quadrature.  Elements of the finite norm class vanish at the
    origin, so origin_value defaults to zero.
    """
    vals = _as_finite_array("x_norm input", values)
    if vals.shape != grid.nodes.shape:
        raise ValueError("grid mismatch")
    x = grid.nodes_with_origin()
    y = np.concatenate(([float(origin_value)], vals))
    h = np.diff(x)
    edge_w = 0.5 * (x[1:] ** 2 - x[:-1] ** 2)
    slope = np.diff(y) / h
    deriv_term = float(np.dot(edge_w, slope * slope))
    ratio = vals / grid.nodes
    ratio_term = float(np.dot(grid.weights, ratio * ratio))
    return math.sqrt(deriv_term + ratio_term)
