"""Command-line front end emitting bit-stable CSV/JSON tables.

Commands: ``solve`` (one profile), ``sweep-beta`` (scaling sweep at
fixed r), ``spectrum`` (mode eigenvalues plus a verdict), ``resolvent``
(growth exponents of the inverse-operator norm), ``phase-diagram``
((r, beta) grid scan), and ``verify`` (invariant suites).

All numeric CSV fields carry 17 significant digits and LF line endings,
so identical inputs and seed reproduce identical bytes.  Exit codes:
0 success, 2 parameter or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .energy import energy, topological_degree
from .radial import ModelParams, Profile, make_grid, params_to_hk, theta, x_norm
from .shape import decay_fit, diagnostics, monotonicity_check, origin_derivative
from .solver import SolveReport, SolverConfig, pool_map, solve_continuation
from .spectral import assemble_mode, min_eigenpairs, resolvent_probe
from .verify import SUITES, run_all, run_suite

# verdict thresholds: an eigenvalue below -NEG_TOL counts as a genuine
# negative direction; the n=1 mode is excused as the translation zero
# mode while it stays inside the zero window and its form residual is
# small (the residual gate is looser than the eigensolver's own 1e-8
# polish target because the quadrature error of the zero-mode identity
# is O(h^2) and sits near 2e-6 at the 1024-point default)
NEG_TOL = 1e-6
ZERO_WINDOW = 1e-3
ZERO_RES_GATE = 1e-5

_EXIT_OK = 0
_EXIT_USAGE = 2
_EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else x
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(_jsonable(obj), indent=2) + "\n")


def _rows_as_json(header: list, rows: list):
    return [dict(zip(header, (_jsonable(v) for v in row))) for row in rows]


def _parse_float_list(raw: str, flag: str) -> list:
    try:
        vals = [float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated numbers, got {raw!r}") from exc
    if not vals:
        raise UsageError(f"{flag} must not be empty")
    return vals


def _parse_mode_list(raw: str) -> list:
    try:
        modes = [int(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"--modes expects comma-separated integers, got {raw!r}") from exc
    if not modes:
        raise UsageError("--modes must not be empty")
    for n in modes:
        if not (0 <= n <= 8):
            raise UsageError(f"mode index {n} outside the supported range 0..8")
    return modes


def _load_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


# config-file keys mirror the flag spellings without the leading dashes
_FILE_KEYS = {
    "r": ("r_scalar", str),
    "beta": ("beta_scalar", str),
    "beta-min": ("beta_min", float),
    "beta-max": ("beta_max", float),
    "beta-count": ("beta_count", int),
    "grid-points": ("grid_points", int),
    "rmax": ("rmax", float),
    "modes": ("modes", str),
    "seed": ("seed", int),
    "out": ("out", str),
    "format": ("format", str),
    "suite": ("suite", str),
}


def _merge_config(ns: argparse.Namespace) -> None:
    if not getattr(ns, "config", None):
        return
    file_vals = _load_config_file(ns.config)
    for key, raw in file_vals.items():
        if key not in _FILE_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        dest, conv = _FILE_KEYS[key]
        if not hasattr(ns, dest):
            continue
        if getattr(ns, dest) is None:
            try:
                setattr(ns, dest, conv(raw))
            except ValueError as exc:
                raise UsageError(f"config key {key!r}: bad value {raw!r}") from exc


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise UsageError(f"{name} must be positive, got {value!r}")
    return value


def _solver_config(ns) -> SolverConfig:
    n = int(ns.grid_points) if ns.grid_points is not None else 1024
    if n < 64:
        raise UsageError("--grid-points must be at least 64")
    rmax = float(ns.rmax) if ns.rmax is not None else None
    if rmax is not None and rmax <= 0:
        raise UsageError("--rmax must be positive")
    return SolverConfig(n_points=n, r_max=rmax)


def _grid_meta(grid) -> dict:
    return {
        "n_points": grid.n_points,
        "r_max": grid.r_max,
        "first_node": float(grid.nodes[0]),
    }


def _decay_summary(report: SolveReport) -> dict | None:
    try:
        fit = decay_fit(report.profile)
    except (ValueError, RuntimeError):
        return None
    nominal = math.sqrt(2.0) * report.profile.params.beta
    return {
        "rate": fit.value,
        "stderr": fit.stderr,
        "window": list(fit.window),
        "n_points": fit.n_points,
        "nominal": nominal,
        "ratio_to_nominal": fit.value / nominal if nominal > 0 else None,
    }


def _solve_sidecar(report: SolveReport, seed: int) -> dict:
    prof = report.profile
    mono, max_q = monotonicity_check(prof)
    out = {
        "command": "solve",
        "r": prof.params.r,
        "beta": prof.params.beta,
        "seed": seed,
        "grid": _grid_meta(prof.grid),
        "converged": report.converged,
        "method": report.method,
        "iterations": report.iterations,
        "residual_sup_norm": report.residual_norm,
        "strictly_interior": report.strictly_interior,
        "energy": energy(prof).as_dict(),
        "degree": topological_degree(prof),
        "decay": _decay_summary(report),
        "origin_derivative": origin_derivative(prof),
        "monotone": mono,
        "max_monotonicity_defect": max_q,
        "continuation_path": [[b, res] for b, res in report.path],
    }
    return out


def cmd_solve(ns) -> int:
    r = _require_positive("--r", ns.r_scalar)
    beta = float(ns.beta_scalar)
    if not (math.isfinite(beta) and beta > 0):
        raise UsageError("--beta must be positive; beta = 0 has no finite-energy profile")
    cfg = _solver_config(ns)
    report = solve_continuation(ModelParams(r=r, beta=beta), cfg)
    prof = report.profile
    grid = prof.grid
    d = diagnostics(prof)
    # recover f' from the monotonicity quantity so every column shares
    # the same origin-aware derivative
    fprime = d.q - np.sin(prof.values) / grid.nodes
    th = theta(grid.nodes, r)
    header = ["rho", "f", "fprime", "theta", "Q", "Qbar", "N", "F", "P"]
    rows = [
        (
            grid.nodes[i],
            prof.values[i],
            fprime[i],
            th[i],
            d.q[i],
            d.q_bar[i],
            d.n_fn[i],
            d.f_fn[i],
            d.p_fn[i],
        )
        for i in range(grid.n_points)
    ]
    out = ns.out or "skyrmion_solve.csv"
    _write_csv(out, header, rows)
    _write_json(out + ".json", _solve_sidecar(report, ns.seed))
    if not report.converged:
        print(
            f"solve did not converge at r={r:g}, beta={beta:g} "
            f"(residual {report.residual_norm:.3e}); wrote partial diagnostics to {out}",
            file=sys.stderr,
        )
        return _EXIT_NUMERICAL
    print(f"wrote {out} and {out}.json (residual {report.residual_norm:.3e})")
    return _EXIT_OK


def _sweep_entry(args):
    r, beta, cfg = args
    report = solve_continuation(ModelParams(r=r, beta=beta), cfg)
    if not report.converged:
        return {"beta": beta, "ok": False}
    prof = report.profile
    grid = prof.grid
    eb = energy(prof)
    diff = prof.values - theta(grid.nodes, r)
    decay = _decay_summary(report)
    return {
        "beta": beta,
        "ok": True,
        "xnorm_diff": x_norm(grid, diff),
        "decay_rate": decay["rate"] if decay else float("nan"),
        "energy": eb,
    }


def cmd_sweep_beta(ns) -> int:
    r = _require_positive("--r", ns.r_scalar)
    bmin = float(ns.beta_min if ns.beta_min is not None else 0.05)
    bmax = float(ns.beta_max if ns.beta_max is not None else 0.4)
    count = int(ns.beta_count if ns.beta_count is not None else 8)
    if count < 1:
        raise UsageError("--beta-count must be at least 1")
    if not (0 < bmin <= bmax):
        raise UsageError("need 0 < beta-min <= beta-max")
    cfg = _solver_config(ns)
    if count == 1:
        betas = [bmin]
    else:
        betas = [float(b) for b in np.geomspace(bmin, bmax, count)]
    entries = pool_map(_sweep_entry, [(r, b, cfg) for b in betas])

    header = ["beta", "xnorm_diff", "decay_rate", "D", "H", "Vminus", "Vplus", "total"]
    rows = []
    nan = float("nan")
    for e in entries:
        if e["ok"]:
            eb = e["energy"]
            rows.append(
                (e["beta"], e["xnorm_diff"], e["decay_rate"], eb.dirichlet, eb.dmi, eb.v_minus, eb.v_plus, eb.total)
            )
        else:
            rows.append((e["beta"], nan, nan, nan, nan, nan, nan, nan))

    good = [e for e in entries if e["ok"]]
    fit = None
    if len(good) >= 5:
        lb = np.log([e["beta"] for e in good])
        ld = np.log([e["xnorm_diff"] for e in good])
        coeffs, cov = np.polyfit(lb, ld, 1, cov=True)
        fit = {
            "exponent": float(coeffs[0]),
            "stderr": float(math.sqrt(max(cov[0, 0], 0.0))),
            "window": [min(e["beta"] for e in good), max(e["beta"] for e in good)],
            "n_points": len(good),
        }
    summary = {
        "command": "sweep-beta",
        "r": r,
        "seed": ns.seed,
        "betas": betas,
        "failed_betas": [e["beta"] for e in entries if not e["ok"]],
        "fit": fit,
    }

    out = ns.out or ("skyrmion_sweep.csv" if ns.format != "json" else "skyrmion_sweep.json")
    if ns.format == "json":
        _write_json(out, {"rows": _rows_as_json(header, rows), **summary})
    else:
        _write_csv(out, header, rows)
        _write_json(out + ".json", summary)
    if not good:
        print("every sweep member failed to converge", file=sys.stderr)
        return _EXIT_NUMERICAL
    print(f"wrote {out} ({len(good)}/{len(betas)} members converged)")
    return _EXIT_OK


def _mode_entries(prof, modes: list) -> list:
    entries = []
    for n in modes:
        try:
            op = assemble_mode(n, prof)
            entry = min_eigenpairs(op, 2)
            entries.append(
                {
                    "n": n,
                    "lambda_min": entry.lambda_min,
                    "lambda_second": entry.lambda_second,
                    "zero_mode_residual": entry.zero_mode_residual,
                }
            )
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            entries.append({"n": n, "error": str(exc)})
    return entries


def _verdict(entries: list) -> str:
    genuine_negative = False
    zero_mode_dip = False
    for e in entries:
        if "error" in e:
            genuine_negative = True
            continue
        lam = e["lambda_min"]
        if lam >= -NEG_TOL:
            continue
        res = e.get("zero_mode_residual")
        excused = (
            e["n"] == 1
            and abs(lam) <= ZERO_WINDOW
            and res is not None
            and res <= ZERO_RES_GATE
        )
        if excused:
            zero_mode_dip = True
        else:
            genuine_negative = True
    if genuine_negative:
        return "unstable"
    if zero_mode_dip:
        return "zero-mode-only"
    return "stable"


def cmd_spectrum(ns) -> int:
    r = _require_positive("--r", ns.r_scalar)
    beta = float(ns.beta_scalar)
    if not (math.isfinite(beta) and beta > 0):
        raise UsageError("--beta must be positive")
    modes = _parse_mode_list(ns.modes if ns.modes is not None else "0,1,2,3")
    if ns.grid_points is None:
        ns.grid_points = 2048
    cfg = _solver_config(ns)
    report = solve_continuation(ModelParams(r=r, beta=beta), cfg)
    out = ns.out or "skyrmion_spectrum.json"
    if not report.converged:
        _write_json(
            out,
            {
                "command": "spectrum",
                "r": r,
                "beta": beta,
                "seed": ns.seed,
                "converged": False,
                "residual_sup_norm": report.residual_norm,
            },
        )
        print(f"profile solve failed at r={r:g}, beta={beta:g}", file=sys.stderr)
        return _EXIT_NUMERICAL
    entries = _mode_entries(report.profile, modes)
    payload = {
        "command": "spectrum",
        "r": r,
        "beta": beta,
        "seed": ns.seed,
        "grid": _grid_meta(report.profile.grid),
        "converged": True,
        "modes": entries,
        "verdict": _verdict(entries),
    }
    _write_json(out, payload)
    print(f"wrote {out} (verdict: {payload['verdict']})")
    return _EXIT_OK


# fixed probe sources: one smooth exponential, one lognormal bump away
# from the origin, one polynomially weighted Gaussian
def _probe_sources(grid) -> list:
    rho = grid.nodes
    return [
        np.exp(-rho),
        np.exp(-0.5 * (np.log(rho) - 1.0) ** 2),
        rho * np.exp(-(rho**2)),
    ]


def cmd_resolvent(ns) -> int:
    r = float(ns.r_scalar) if ns.r_scalar is not None else 0.5
    r = _require_positive("--r", r)
    bmin = float(ns.beta_min if ns.beta_min is not None else 0.02)
    bmax = float(ns.beta_max if ns.beta_max is not None else 0.3)
    count = int(ns.beta_count if ns.beta_count is not None else 8)
    if count < 2:
        raise UsageError("--beta-count must be at least 2 for a growth fit")
    if not (0 < bmin < bmax <= 0.5):
        raise UsageError("need 0 < beta-min < beta-max <= 0.5")
    xi_beta = float(ns.beta_scalar) if ns.beta_scalar is not None else 0.1
    if not (0 < xi_beta <= 0.5):
        raise UsageError("--beta (implicit-potential solve point) must lie in (0, 0.5]")
    n = int(ns.grid_points) if ns.grid_points is not None else 4096
    if n < 64:
        raise UsageError("--grid-points must be at least 64")
    # the probe grid is built for the smallest beta in the ladder so the
    # longest tail fits; below 0.05 the default box is already 600
    grid_beta = max(bmin, 0.05)
    rmax = float(ns.rmax) if ns.rmax is not None else None
    grid = make_grid(grid_beta, n, r, r_max=rmax)
    betas = [float(b) for b in np.geomspace(bmax, bmin, count)]
    sources = _probe_sources(grid)

    legs = []
    xi_zero = np.zeros(grid.n_points)
    legs.append(("zero", xi_zero, None))
    rep = solve_continuation(ModelParams(r=r, beta=xi_beta), _solver_config(ns))
    if not rep.converged:
        print(f"correction solve failed at r={r:g}, beta={xi_beta:g}", file=sys.stderr)
        return _EXIT_NUMERICAL
    sg = rep.profile.grid
    xp = np.concatenate(([0.0], sg.nodes))
    fp = np.concatenate(([0.0], rep.profile.values - theta(sg.nodes, r)))
    xi_solved = np.interp(grid.nodes, xp, fp, right=0.0)
    legs.append(("solved", xi_solved, x_norm(grid, xi_solved)))

    results = []
    for name, xi, xnorm in legs:
        fits = {}
        for s in (0.0, 1.0):
            fit = resolvent_probe(r, xi, betas, s, sources, grid)
            fits[f"s{int(s)}"] = {
                "exponent": fit.value,
                "stderr": fit.stderr,
                "window": list(fit.window),
                "n_points": fit.n_points,
            }
        leg = {"xi": name, **fits}
        if xnorm is not None:
            leg["xi_xnorm"] = xnorm
        results.append(leg)

    payload = {
        "command": "resolvent",
        "r": r,
        "seed": ns.seed,
        "betas": betas,
        "xi_beta": xi_beta,
        "grid": _grid_meta(grid),
        "legs": results,
    }
    out = ns.out or "skyrmion_resolvent.json"
    _write_json(out, payload)
    print(f"wrote {out}")
    return _EXIT_OK


def _phase_cell(args):
    r, beta, modes, cfg = args
    report = solve_continuation(ModelParams(r=r, beta=beta), cfg)
    hk = params_to_hk(ModelParams(r=r, beta=beta))
    if not report.converged:
        return (r, beta, hk.h, hk.k, False, False, float("nan"), "failed")
    mono, _ = monotonicity_check(report.profile)
    entries = _mode_entries(report.profile, modes)
    lams = [e["lambda_min"] for e in entries if "error" not in e]
    lam_min = min(lams) if lams else float("nan")
    return (r, beta, hk.h, hk.k, True, mono, lam_min, _verdict(entries))


def cmd_phase_diagram(ns) -> int:
    rs = _parse_float_list(ns.r_scalar, "--r")
    betas = _parse_float_list(ns.beta_scalar, "--beta")
    for r in rs:
        _require_positive("--r", r)
    for b in betas:
        if b <= 0:
            raise UsageError("--beta values must be positive")
    modes = _parse_mode_list(ns.modes if ns.modes is not None else "0,1,2,3")
    cfg = _solver_config(ns)
    cells = [(r, b, modes, cfg) for r in rs for b in betas]
    rows = pool_map(_phase_cell, cells)
    header = ["r", "beta", "h", "k", "converged", "monotone", "lambda_min", "verdict"]
    out = ns.out or ("skyrmion_phase.csv" if ns.format != "json" else "skyrmion_phase.json")
    if ns.format == "json":
        _write_json(out, {"command": "phase-diagram", "seed": ns.seed, "rows": _rows_as_json(header, rows)})
    else:
        _write_csv(out, header, rows)
    n_ok = sum(1 for row in rows if row[4])
    print(f"wrote {out} ({n_ok}/{len(rows)} cells converged)")
    return _EXIT_OK


def cmd_verify(ns) -> int:
    suite = ns.suite or "all"
    if suite == "all":
        checks = run_all(seed=ns.seed)
    else:
        try:
            checks = run_suite(suite, seed=ns.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    payload = {
        "command": "verify",
        "suite": suite,
        "seed": ns.seed,
        "checks": [c.as_dict() for c in checks],
        "n_checks": len(checks),
        "n_failed": sum(1 for c in checks if not c.passed),
        "all_pass": all(c.passed for c in checks),
    }
    text = json.dumps(_jsonable(payload), indent=2)
    if ns.out:
        _write_text(ns.out, text + "\n")
    print(text)
    return _EXIT_OK if payload["all_pass"] else _EXIT_NUMERICAL


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--r", dest="r_scalar", default=None, help="anisotropy-to-DMI ratio r (lists allowed for phase-diagram)")
    sub.add_argument("--beta", dest="beta_scalar", default=None, help="anisotropy strength beta")
    sub.add_argument("--beta-min", dest="beta_min", type=float, default=None)
    sub.add_argument("--beta-max", dest="beta_max", type=float, default=None)
    sub.add_argument("--beta-count", dest="beta_count", type=int, default=None)
    sub.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    sub.add_argument("--rmax", dest="rmax", type=float, default=None)
    sub.add_argument("--modes", dest="modes", default=None, help="comma-separated mode indices, e.g. 0,1,2,3")
    sub.add_argument("--seed", dest="seed", type=int, default=None)
    sub.add_argument("--out", dest="out", default=None)
    sub.add_argument("--format", dest="format", choices=("csv", "json"), default=None)
    sub.add_argument("--config", dest="config", default=None, help="flat key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skyrlab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "sweep-beta", "spectrum", "resolvent", "phase-diagram"):
        _add_common(subs.add_parser(name))
    verify = subs.add_parser("verify")
    _add_common(verify)
    verify.add_argument("--suite", dest="suite", default=None, choices=SUITES + ("all",))
    return parser


_DISPATCH = {
    "solve": cmd_solve,
    "sweep-beta": cmd_sweep_beta,
    "spectrum": cmd_spectrum,
    "resolvent": cmd_resolvent,
    "phase-diagram": cmd_phase_diagram,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return _EXIT_USAGE if code not in (0, None) else _EXIT_OK
    try:
        _merge_config(ns)
        if ns.seed is None:
            ns.seed = 42
        if ns.command in ("solve", "spectrum") and ns.beta_scalar is None:
            raise UsageError(f"{ns.command} requires --beta")
        if ns.command == "phase-diagram":
            if ns.r_scalar is None or ns.beta_scalar is None:
                raise UsageError("phase-diagram requires --r and --beta lists")
        elif ns.command in ("solve", "spectrum", "sweep-beta") and ns.r_scalar is None:
            ns.r_scalar = "1.0"
        if ns.command in ("solve", "spectrum", "sweep-beta", "resolvent"):
            if ns.r_scalar is not None:
                try:
                    ns.r_scalar = float(ns.r_scalar)
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"--r expects a number, got {ns.r_scalar!r}") from exc
            if ns.beta_scalar is not None:
                try:
                    ns.beta_scalar = float(ns.beta_scalar)
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"--beta expects a number, got {ns.beta_scalar!r}") from exc
        return _DISPATCH[ns.command](ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except ValueError as exc:
        # domain constructors reject bad parameters with ValueError
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
