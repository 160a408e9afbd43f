"""Dev check G: transverse solves, contraction, scaling exponents."""

import time

import numpy as np

from cryamabe.bubbles import BubbleParams
from cryamabe.deform import (GluingSpec, glued_deformation,
                             zero_deformation)
from cryamabe.heis import HPoint
from cryamabe.reduce import GridSpec, ReductionSolver

sv = ReductionSolver(GridSpec(8.0, 57, 57, 45))
t0 = time.time()
sv._ensure_preconditioner()
print(f"[precond] {time.time() - t0:.1f}s, "
      f"theta top {np.sort(sv._precond['theta'])[::-1][:4]}")

# d = 0 fast path
t0 = time.time()
st = sv.ls_solve(BubbleParams(), zero_deformation())
print(f"[d=0] iters {st.iterations}, residual {st.residual_norm:.1e}, "
      f"|v| {st.norm_v:.1e} ({time.time() - t0:.2f}s)")


def ball(s):
    return glued_deformation(GluingSpec(
        centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.1,),
        amplitudes=(s,), annulus_factor=2.0))


# one full cell solve, timed
params = BubbleParams(center=HPoint(0.0, 0.0, 0.0), scale=6.0)
t0 = time.time()
state, cell = sv._solve_cell(params, ball(0.05), tol=1e-8)
dt = time.time() - t0
print(f"[cell lam=6 s=0.05] {dt:.1f}s, outer {state.iterations}, "
      f"krylov {state.krylov_iterations}, |v|_X {state.norm_v:.5f}, "
      f"tangent {state.tangent_residual:.2e}")
print("   residual history:", [f"{r:.2e}" for r in state.residual_history])
t0 = time.time()
parts = sv.value_parts(cell, state, n_gl=6)
print(f"[value] {time.time() - t0:.1f}s -> {parts['value']:.6f} "
      f"(flat {parts['flat']:.6f})")
for k in ("norm_sq", "deformation_self", "cross", "deformation_v",
          "nonlinear"):
    print(f"   {k:18s} {parts[k]: .6e}")

# s-slope of |v|_X at fixed cell
norms = {}
for s in (0.02, 0.04, 0.08):
    t0 = time.time()
    stt = sv.ls_solve(params, ball(s), tol=1e-9)
    norms[s] = stt.norm_v
    print(f"[s={s}] |v|_X = {stt.norm_v:.6e}, outer {stt.iterations}, "
          f"krylov {stt.krylov_iterations} ({time.time() - t0:.1f}s)")
ss = sorted(norms)
sl = np.polyfit(np.log([s for s in ss]), np.log([norms[s] for s in ss]), 1)[0]
print(f"[slope] |v|_X ~ s^{sl:.4f}")

# lambda sweep of the reduced value at s = 0.05, ball at the origin
d = ball(0.05)
lams = np.geomspace(2.0, 12.0, 7)
vals = []
for lam in lams:
    t0 = time.time()
    value, parts, stt = sv.reduced_value(
        BubbleParams(center=HPoint(0, 0, 0), scale=float(lam)), d,
        tol=1e-8, n_gl=6)
    vals.append(value)
    print(f"[lam={lam:6.3f}] J = {value:.8f}  (J-4pi^2 = "
          f"{value - 4 * np.pi ** 2: .3e}, T0 {parts['deformation_self']: .3e}, "
          f"4|v|^2 {4 * parts['norm_sq']: .3e}, cross {parts['cross']: .3e}) "
          f"{time.time() - t0:.0f}s")
gaps = np.array(vals) - 4 * np.pi ** 2
pos = gaps > 0
if pos.all():
    sl2 = np.polyfit(np.log(lams), np.log(gaps), 1)[0]
    print(f"[lambda slope] log(J-4pi^2) ~ {sl2:.3f} log(lam)")
else:
    print("[lambda slope] gap changes sign, no clean power law", gaps)
