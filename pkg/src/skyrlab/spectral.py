"""Fourier-mode Hessian forms, their low eigenpairs, and resolvent probes.

Perturbations of an equivariant profile split into angular Fourier
sectors.  Each sector n carries a quadratic form on scalar pairs (a, b)

    H(n)[a,b] = int [ a'^2 + b'^2 + n^2 (a^2+b^2)/rho^2
                      + 4n (cos f/rho^2 - r sin f/rho) ab
                      + G1 a^2 + G2 b^2 ] rho drho,

discretized here with linear-element stiffness on the graded mesh and
lumped node weights for every local term.  The n = 1 sector contains the
translational zero mode (sin f/rho, -f'); sector forms are monotone in n
for small r, which reduces stability scans to n <= 1.  The linearized
operator F*F + xi_bar^2/2 + beta^2 used by the resolvent bounds is
assembled in sum-of-squares form, so its discrete spectrum sits above
beta^2 by construction rather than by luck.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded, solve_banded, solveh_banded

from .radial import (
    ModelParams,
    Profile,
    RadialGrid,
    grid_gradient,
    theta,
    x_norm,
)
from .shape import FitResult

__all__ = [
    "ModeOperator",
    "SpectralEntry",
    "LinearizedOperator",
    "assemble_mode",
    "mode_form_value",
    "a_block_apply",
    "min_eigenpairs",
    "mode_monotonicity_probe",
    "assemble_linearized",
    "resolvent_probe",
    "instability_direction",
]


@dataclass(frozen=True)
class ModeOperator:
    """Quadratic form of one Fourier sector in banded symmetric storage.

    DOFs are interleaved pairs (a_1, b_1, a_2, b_2, ...) over the grid
    nodes, which keeps the scalar bandwidth at two (coupling is nodewise,
    derivative neighbors are two slots apart).  `bands` is the upper
    banded form: row 0 the second superdiagonal, row 1 the first, row 2
    the diagonal.  The cached arrays are the nodewise potentials; the
    zero-mode sample pair is kept because the n = 1 sector is asked for
    it constantly.
    """

    n: int
    grid: RadialGrid
    params: ModelParams
    bands: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    coupling: np.ndarray
    zero_a: np.ndarray
    zero_b: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("mode index must be nonnegative")
        if self.bands.shape != (3, 2 * self.grid.n_points):
            raise ValueError("banded storage has the wrong shape")


@dataclass(frozen=True)
class SpectralEntry:
    """Lowest eigenpairs of one sector against the rho-weighted mass."""

    n: int
    lambda_min: float
    lambda_second: float
    eigvec: np.ndarray
    zero_mode_residual: float | None

    def __post_init__(self) -> None:
        if not (self.lambda_min <= self.lambda_second + 1e-300):
            raise ValueError("eigenvalues out of order")


@dataclass(frozen=True)
class LinearizedOperator:
    """Sum-of-squares discretization of F*F + xi_bar^2/2 + beta^2."""

    grid: RadialGrid
    matrix: np.ndarray
    xi: np.ndarray
    xi_bar: np.ndarray
    beta: float


def _potentials(profile: Profile):
    grid = profile.grid
    rho = grid.nodes
    f = profile.values
    r = profile.params.r
    b2 = profile.params.beta * profile.params.beta
    fp = grid_gradient(grid, f, profile.origin_value)
    sf = np.sin(f)
    cf = np.cos(f)
    common = cf * (1.0 - cf) + b2 * cf * (1.0 + cf)
    g1 = cf * cf / rho**2 - fp * fp - 2.0 * r * fp - (2.0 * r / rho) * sf * cf + common
    g2 = (
        (cf * cf - sf * sf) / rho**2
        - (4.0 * r / rho) * sf * cf
        + (1.0 - b2) * sf * sf
        + common
    )
    coupling = cf / rho**2 - r * sf / rho
    return g1, g2, coupling, fp, sf


def _edge_coefficients(grid: RadialGrid):
    """Stiffness weight W_e/h^2 for each interior edge of the mesh.

    Edges run between consecutive grid nodes only.  There is no edge
    reaching rho = 0: the sector forms are evaluated on sampled pairs
    that need not vanish there (the zero mode does not), and the
    individually log-divergent local terms cancel nodewise instead.
    """
    x = grid.nodes
    h = np.diff(x)
    w_e = 0.5 * (x[1:] ** 2 - x[:-1] ** 2)
    return w_e / (h * h)


def assemble_mode(n: int, profile: Profile) -> ModeOperator:
    """Build the banded quadratic form of sector n on the profile's grid."""
    if n < 0:
        raise ValueError("mode index must be nonnegative")
    grid = profile.grid
    rho = grid.nodes
    w = grid.weights
    g1, g2, coupling, fp, sf = _potentials(profile)

    m = grid.n_points
    bands = np.zeros((3, 2 * m))
    coef = _edge_coefficients(grid)

    # derivative terms couple a_i to a_{i+1} (slot distance 2), same for b
    bands[2, 0 : 2 * m - 2 : 2] += coef
    bands[2, 2 : 2 * m : 2] += coef
    bands[2, 1 : 2 * m - 1 : 2] += coef
    bands[2, 3 : 2 * m : 2] += coef
    bands[0, 2 : 2 * m : 2] = -coef
    bands[0, 3 : 2 * m : 2] = -coef

    # nodewise terms with lumped weights
    n2 = float(n * n)
    bands[2, 0 : 2 * m : 2] += w * (n2 / rho**2 + g1)
    bands[2, 1 : 2 * m : 2] += w * (n2 / rho**2 + g2)
    # the ab cross term 4n c ab enters the symmetric matrix as 2n c
    bands[1, 1 : 2 * m : 2] = 2.0 * n * coupling * w

    return ModeOperator(
        n=n,
        grid=grid,
        params=profile.params,
        bands=bands,
        g1=g1,
        g2=g2,
        coupling=coupling,
        zero_a=sf / rho,
        zero_b=-fp,
    )


def _band_matvec(bands: np.ndarray, v: np.ndarray) -> np.ndarray:
    d = bands[2]
    s1 = bands[1]
    s2 = bands[0]
    y = d * v
    y[:-1] += s1[1:] * v[1:]
    y[1:] += s1[1:] * v[:-1]
    y[:-2] += s2[2:] * v[2:]
    y[2:] += s2[2:] * v[:-2]
    return y


def _interleave(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    v = np.empty(a.size + b.size)
    v[0::2] = a
    v[1::2] = b
    return v


def mode_form_value(op: ModeOperator, a: np.ndarray, b: np.ndarray) -> float:
    """Evaluate the sector form on grid-sampled (a, b)."""
    v = _interleave(np.asarray(a, float), np.asarray(b, float))
    if v.size != op.bands.shape[1]:
        raise ValueError("sample length does not match the grid")
    return float(v @ _band_matvec(op.bands, v))


def _form_scale(op: ModeOperator, a: np.ndarray, b: np.ndarray) -> float:
    """Positive-part value of the form, the natural residual denominator."""
    grid = op.grid
    rho = grid.nodes
    w = grid.weights
    coef = _edge_coefficients(grid)
    da = np.diff(a)
    db = np.diff(b)
    n2 = float(op.n * op.n)
    val = float(np.sum(coef * (da * da + db * db)))
    val += float(np.sum(w * (n2 / rho**2) * (a * a + b * b)))
    val += float(np.sum(w * np.abs(op.g1) * a * a))
    val += float(np.sum(w * np.abs(op.g2) * b * b))
    val += float(np.sum(w * np.abs(2.0 * op.n * op.coupling) * 2.0 * np.abs(a * b)))
    return val


def a_block_apply(op: ModeOperator, a: np.ndarray) -> np.ndarray:
    """Apply the radial A-block operator to a sample vanishing at the origin.

    Returns the nodewise value of -(rho a')'/rho + G1 a, the operator
    whose action on sin f reproduces -2r f' sin f.  Unlike the sector
    form itself this includes the origin edge (ghost value zero): the
    identity's test function vanishes there, and dropping the edge would
    corrupt the first row by the boundary flux.
    """
    grid = op.grid
    x = np.concatenate(([0.0], grid.nodes))
    h = np.diff(x)
    w_e = 0.5 * (x[1:] ** 2 - x[:-1] ** 2)
    coef = w_e / (h * h)
    a_ext = np.concatenate(([0.0], np.asarray(a, float)))
    da = np.diff(a_ext)
    flux = coef * da
    out = np.zeros(grid.n_points)
    out += flux[: grid.n_points]
    out[: grid.n_points - 1] -= flux[1:]
    out += grid.weights * op.g1 * a
    return out / grid.weights


def _mass_diagonal(grid: RadialGrid) -> np.ndarray:
    return np.repeat(grid.weights, 2)


def _polish_pair(bands, mass, lam, vec):
    """Inverse-iteration polish of one pencil eigenpair to tight residual."""
    mdim = bands.shape[1]
    full = np.zeros((5, mdim))
    full[0] = bands[0]
    full[1] = bands[1]
    full[2] = bands[2]
    full[3, :-1] = bands[1, 1:]
    full[4, :-2] = bands[0, 2:]
    x = vec / math.sqrt(float(vec @ (mass * vec)))
    shift = lam
    for _ in range(40):
        res = _band_matvec(bands, x) - lam * mass * x
        rnorm = float(np.linalg.norm(res)) / float(np.linalg.norm(x))
        if rnorm <= 1e-8:
            break
        shifted = full.copy()
        shifted[2] -= shift * mass
        try:
            y = solve_banded((2, 2), shifted, mass * x)
        except np.linalg.LinAlgError:
            # the shift landed on a Ritz value; nudge it off
            shift = shift * (1.0 + 1e-10) + 1e-14
            continue
        norm = math.sqrt(float(y @ (mass * y)))
        if not math.isfinite(norm) or norm == 0.0:
            shift = shift * (1.0 + 1e-10) + 1e-14
            continue
        x = y / norm
        lam = float(x @ _band_matvec(bands, x))
    return lam, x


def min_eigenpairs(op: ModeOperator, count: int, block: str | None = None) -> SpectralEntry:
    """Lowest eigenpairs of the sector form against the lumped mass.

    The pencil is symmetrized by the diagonal mass square root, solved
    with the banded symmetric eigensolver for the lowest Ritz values,
    then each pair is polished by shifted inverse iteration on the
    original pencil until the residual drops to 1e-8.  The grid endpoint
    at r_max is pinned (the test-function space is Dirichlet there).

    With block "a" or "b" the form is restricted to one scalar field,
    which is only meaningful in the decoupled n = 0 sector where the
    form splits into independent A and B parts.
    """
    if count < 1:
        raise ValueError("need at least one eigenpair")
    if block is not None:
        if op.n != 0:
            raise ValueError("block restriction needs the decoupled n = 0 sector")
        if block not in ("a", "b"):
            raise ValueError("block must be 'a' or 'b'")
        return _block_eigenpairs(op, count, block)
    m = op.grid.n_points
    mdim = 2 * (m - 1)
    bands = op.bands[:, :mdim].copy()
    mass = _mass_diagonal(op.grid)[:mdim]
    scale = 1.0 / np.sqrt(mass)
    scaled = np.zeros_like(bands)
    scaled[2] = bands[2] * scale * scale
    scaled[1, 1:] = bands[1, 1:] * scale[:-1] * scale[1:]
    scaled[0, 2:] = bands[0, 2:] * scale[:-2] * scale[2:]

    k = max(count, 2)
    vals, vecs = eig_banded(
        scaled, lower=False, select="i", select_range=(0, k - 1)
    )
    pairs = []
    for j in range(k):
        lam = float(vals[j])
        vec = scale * vecs[:, j]
        lam, vec = _polish_pair(bands, mass, lam, vec)
        pairs.append((lam, vec))
    pairs.sort(key=lambda p: p[0])

    lam_min, vec_min = pairs[0]
    lam_second = pairs[1][0]
    full_vec = np.zeros((2, m))
    full_vec[0, : m - 1] = vec_min[0::2]
    full_vec[1, : m - 1] = vec_min[1::2]

    residual = None
    if op.n == 1:
        raw = mode_form_value(op, op.zero_a, op.zero_b)
        residual = abs(raw) / _form_scale(op, op.zero_a, op.zero_b)

    return SpectralEntry(
        n=op.n,
        lambda_min=lam_min,
        lambda_second=lam_second,
        eigvec=full_vec,
        zero_mode_residual=residual,
    )


def _block_eigenpairs(op: ModeOperator, count: int, block: str) -> SpectralEntry:
    m = op.grid.n_points
    start = 0 if block == "a" else 1
    diag = op.bands[2, start::2]
    sup = op.bands[0, start + 2 :: 2]
    scal = np.zeros((3, m))
    scal[2] = diag
    scal[1, 1:] = sup
    bands = scal[:, : m - 1].copy()
    mass = op.grid.weights[: m - 1]
    scale = 1.0 / np.sqrt(mass)
    scaled = np.zeros_like(bands)
    scaled[2] = bands[2] * scale * scale
    scaled[1, 1:] = bands[1, 1:] * scale[:-1] * scale[1:]
    # the scalar problem is tridiagonal; the shared 5-band polish still
    # applies with an empty second superdiagonal
    scaled_t = scaled[1:]
    k = max(count, 2)
    vals, vecs = eig_banded(scaled_t, lower=False, select="i", select_range=(0, k - 1))
    pairs = []
    for j in range(k):
        lam = float(vals[j])
        vec = scale * vecs[:, j]
        lam, vec = _polish_pair(bands, mass, lam, vec)
        pairs.append((lam, vec))
    pairs.sort(key=lambda p: p[0])
    lam_min, vec_min = pairs[0]
    full_vec = np.zeros((2, m))
    full_vec[0 if block == "a" else 1, : m - 1] = vec_min
    return SpectralEntry(
        n=op.n,
        lambda_min=lam_min,
        lambda_second=pairs[1][0],
        eigvec=full_vec,
        zero_mode_residual=None,
    )


def _random_pair(grid: RadialGrid, rng) -> tuple:
    """Smooth compactly-concentrated random (a, b) samples."""
    log_rho = np.log(grid.nodes)
    lo, hi = log_rho[0], log_rho[-1]
    a = np.zeros(grid.n_points)
    b = np.zeros(grid.n_points)
    for target in (a, b):
        for _ in range(3):
            center = rng.uniform(lo + 0.15 * (hi - lo), hi - 0.15 * (hi - lo))
            width = rng.uniform(0.05, 0.3) * (hi - lo)
            amp = rng.normal()
            target += amp * np.exp(-0.5 * ((log_rho - center) / width) ** 2)
    return a, b


def mode_monotonicity_probe(
    profile: Profile, k_max: int, trials: int, seed: int = 42
) -> bool:
    """Check that sector forms do not decrease from k to k+1 (k >= 1).

    Random smooth pairs are evaluated against consecutive sector forms;
    the difference must stay above -1e-10 times the pair's mass norm.
    Meaningful in the small-r regime where the guarantee holds.
    """
    if k_max < 2:
        raise ValueError("need k_max >= 2 to compare sectors")
    ops = [assemble_mode(k, profile) for k in range(1, k_max + 1)]
    rng = np.random.default_rng(seed)
    w = profile.grid.weights
    for _ in range(trials):
        a, b = _random_pair(profile.grid, rng)
        norm2 = float(np.sum(w * (a * a + b * b)))
        values = [mode_form_value(op, a, b) for op in ops]
        for k in range(len(values) - 1):
            if values[k + 1] - values[k] < -1e-10 * norm2:
                return False
    return True


def assemble_linearized(
    xi: np.ndarray, beta: float, r: float, grid: RadialGrid
) -> LinearizedOperator:
    """Discretize F*F + xi_bar^2/2 + beta^2 with F = d/drho + cos(theta)/rho.

    Each mesh edge contributes the square of the first-order difference
    of F, so the assembled matrix dominates beta^2 times the mass by
    construction.  The origin edge is included with a zero ghost value
    (the operator's domain forces decay there); the outer end is left
    natural, which is harmless for sources that die before r_max.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    xi = np.asarray(xi, float)
    if xi.shape != grid.nodes.shape:
        raise ValueError("xi must be sampled on the grid")
    if x_norm(grid, xi) > 0.5:
        raise ValueError("xi too large: the resolvent estimate is perturbative")

    rho = grid.nodes
    x = np.concatenate(([0.0], rho))
    h = np.diff(x)
    w_e = 0.5 * (x[1:] ** 2 - x[:-1] ** 2)
    mid = 0.5 * (x[1:] + x[:-1])
    c_mid = np.empty_like(mid)
    c_mid[0] = math.cos(theta(np.array([mid[0]]), r)[0]) / mid[0]
    c_mid[1:] = np.cos(theta(mid[1:], r)) / mid[1:]

    n = grid.n_points
    upper = np.zeros((2, n))
    # edge (p, q): W_e * (du/h + c (u_p+u_q)/2)^2
    g_lo = -1.0 / h + 0.5 * c_mid
    g_hi = 1.0 / h + 0.5 * c_mid
    diag = np.zeros(n)
    # origin edge: ghost value zero, only the high end survives
    diag[0] += w_e[0] * g_hi[0] * g_hi[0]
    diag[: n - 1] += w_e[1:] * g_lo[1:] * g_lo[1:]
    diag[1:] += w_e[1:] * g_hi[1:] * g_hi[1:]
    upper[0, 1:] = w_e[1:] * g_lo[1:] * g_hi[1:]

    xi_bar = xi + 4.0 * r / np.sqrt(rho * rho + 4.0 * r * r)
    diag += grid.weights * (0.5 * xi_bar * xi_bar + beta * beta)
    upper[1] = diag

    return LinearizedOperator(grid=grid, matrix=upper, xi=xi, xi_bar=xi_bar, beta=beta)


def resolvent_probe(
    r: float,
    xi: np.ndarray,
    betas,
    s: float,
    sources,
    grid: RadialGrid,
) -> FitResult:
    """Measure the growth of X-norm solution bounds as beta decreases.

    For each beta the linear system (F*F + xi_bar^2/2 + beta^2) u = g is
    solved for every source g; the reported exponent is the slope of
    log(max ratio) against log(1/beta), where ratio is the solution
    X-norm over the rho^s-weighted source norm.
    """
    beta_list = [float(b) for b in betas]
    if len(beta_list) < 2:
        raise ValueError("need at least two beta values")
    if any(b2 >= b1 for b1, b2 in zip(beta_list, beta_list[1:])):
        raise ValueError("betas must be strictly descending")
    if beta_list[0] > 0.5 or beta_list[-1] <= 0:
        raise ValueError("betas must lie in (0, 0.5]")
    if not 0.0 <= s <= 1.0:
        raise ValueError("weight power s must lie in [0, 1]")
    source_list = [np.asarray(g, float) for g in sources]
    if not source_list:
        raise ValueError("need at least one source")
    w = grid.weights
    rho = grid.nodes
    norms = []
    for g in source_list:
        if g.shape != rho.shape:
            raise ValueError("sources must be sampled on the grid")
        val = math.sqrt(float(np.sum(w * (rho ** (2.0 * s)) * g * g)))
        if not (math.isfinite(val) and val > 0):
            raise ValueError("source has no finite weighted norm")
        norms.append(val)

    ratios = []
    for b in beta_list:
        op = assemble_linearized(xi, b, r, grid)
        best = 0.0
        for g, gnorm in zip(source_list, norms):
            u = solveh_banded(op.matrix, w * g)
            best = max(best, x_norm(grid, u) / gnorm)
        ratios.append(best)

    log_inv_b = np.log(1.0 / np.asarray(beta_list))
    log_ratio = np.log(np.asarray(ratios))
    coeffs, cov = np.polyfit(log_inv_b, log_ratio, 1, cov=True)
    return FitResult(
        value=float(coeffs[0]),
        stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        window=(beta_list[-1], beta_list[0]),
        n_points=len(beta_list),
    )


def instability_direction(profile: Profile) -> tuple:
    """Most negative sector eigenpair over n = 0..4, if any.

    Returns (n, eigvec, value).  A profile with no sector dipping below
    the zero-mode tolerance is reported as numerically stable.
    """
    best = None
    for n in range(5):
        entry = min_eigenpairs(assemble_mode(n, profile), 1)
        if best is None or entry.lambda_min < best[2]:
            best = (n, entry.eigvec, entry.lambda_min)
    if best[2] >= -1e-6:
        raise RuntimeError("numerically stable at this resolution")
    return best
