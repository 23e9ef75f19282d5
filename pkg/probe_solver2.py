import numpy as np, math, time
from skyrlab.radial import ModelParams, make_grid, theta, x_norm
from skyrlab.energy import energy, truncated_theta, truncated_theta_profile
from skyrlab.solver import (SolverConfig, solve_newton, solve_continuation,
                            minimize_constrained)
from skyrlab.radial import Profile

cfg = SolverConfig()

# --- A: minimize_constrained (1,3) vs corridor newton ---
p = ModelParams(r=1.0, beta=3.0)
g = make_grid(3.0)
lo = np.zeros(g.n_points)
up = theta(g.nodes, 1.0)
t0 = time.time()
loP = Profile(grid=g, values=lo, params=p)
upP = Profile(grid=g, values=up, params=p)
rep = minimize_constrained(p, loP, upP, cfg)
tA = time.time() - t0
e = energy(rep.profile)
print(f"A1 minimize (1,3): method={rep.method} conv={rep.converged} "
      f"interior={rep.strictly_interior} E={e.total:.6f} res={rep.residual_norm:.2e} "
      f"iters={rep.iterations} t={tA:.1f}s")
mn = rep.profile.values.min()
print(f"   min f={mn:.3e}  max f-theta={np.max(rep.profile.values-up):.3e}")

init = truncated_theta_profile(g, p, 2.0/3.0)
repN = solve_newton(p, init, cfg)
dX = x_norm(g, rep.profile.values - repN.profile.values)
print(f"A2 newton (1,3): conv={repN.converged} E={energy(repN.profile).total:.6f} "
      f"agree X-norm={dX:.2e}  (want <=1e-6)")

# --- B: minimize (1,0.5) box [f_beta0=5, theta] ---
p2 = ModelParams(r=1.0, beta=0.5)
g2 = make_grid(0.5)
init5 = truncated_theta_profile(g2, ModelParams(r=1.0, beta=5.0), 0.4)
rep5 = solve_newton(ModelParams(r=1.0, beta=5.0), init5, cfg)
print(f"B0 newton (1,5) on beta=0.5 grid: conv={rep5.converged} res={rep5.residual_norm:.2e}")
lo2 = np.clip(rep5.profile.values, 0.0, None)
up2 = theta(g2.nodes, 1.0)
t0 = time.time()
lo2P = Profile(grid=g2, values=lo2, params=p2)
up2P = Profile(grid=g2, values=up2, params=p2)
rep2 = minimize_constrained(p2, lo2P, up2P, cfg)
tB = time.time() - t0
gap_lo = np.min(rep2.profile.values - lo2)
gap_up = np.min(up2 - rep2.profile.values)
print(f"B1 minimize (1,0.5): method={rep2.method} conv={rep2.converged} "
      f"gap_lo={gap_lo:.3e} gap_up={gap_up:.3e} t={tB:.1f}s")

# --- C: infeasible bounds ---
try:
    minimize_constrained(p2, up2P, lo2P, cfg)
    print("C infeasible: NO ERROR (bad)")
except ValueError as ex:
    print(f"C infeasible: ValueError: {ex}")

# --- D: stage-1 newton basins ---
print("D stage-1 basins (beta_start=3r+1):")
for r in (0.25, 0.5, 1.0, 1.5, 2.0):
    b = 3.0 * r + 1.0
    gg = make_grid(b, r=r)
    row = [f"  r={r:<4} b={b:<5}"]
    for name, cut in (("5/b", 5.0 / b), ("2r/b", 2.0 * r / b)):
        ini = truncated_theta_profile(gg, ModelParams(r=r, beta=b), cut)
        rp = solve_newton(ModelParams(r=r, beta=b), ini, cfg)
        row.append(f"{name}:{'OK' if rp.converged else 'fail'}")
    print(" ".join(row))

# --- E: continuations ---
for (r, bt) in ((1.0, 0.1), (1.0, 0.05), (0.5, 1.0), (2.0, 0.02)):
    t0 = time.time()
    try:
        c = solve_continuation(ModelParams(r=r, beta=bt), cfg)
        el = time.time() - t0
        gg = c.profile.grid
        d = x_norm(gg, c.profile.values - theta(gg.nodes, r))
        print(f"E ({r},{bt}): conv={c.converged} method={c.method} stages={len(c.path)} "
            f"interior={c.strictly_interior} dist-theta={d:.4f} t={el:.1f}s")
        if not c.strictly_interior:
            v = c.profile.values
            th = theta(gg.nodes, r)
            bad_lo = np.where(v[:-1] <= 0)[0]
            bad_hi = np.where(v >= th)[0]
            print(f"   interior fail: n<=0 {len(bad_lo)} nodes {bad_lo[:5]}, "
                  f"n>=theta {len(bad_hi)} nodes {bad_hi[:5]}")
    except Exception as ex:
        print(f"E ({r},{bt}): EXC {type(ex).__name__}: {ex}")
