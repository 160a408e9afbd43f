"""Dev check H: window scan calibration (timing, margins, scaling)."""

import json
import time

import numpy as np

from cryamabe.bubbles import BubbleParams
from cryamabe.deform import GluingSpec, glued_deformation, zero_deformation
from cryamabe.heis import HPoint
from cryamabe.reduce import (GridSpec, ReductionSolver, ScanWindow,
                             scan_window)

sv = ReductionSolver(GridSpec(8.0, 45, 45, 35))
t0 = time.time()
sv._ensure_preconditioner()
print(f"[precond 45x45x35] {time.time() - t0:.0f}s, "
      f"theta top {np.sort(sv._precond['theta'])[::-1][:3]}")


def ball(s):
    return glued_deformation(GluingSpec(
        centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.1,),
        amplitudes=(s,), annulus_factor=2.0))


# single-cell timing at scan tolerance
t0 = time.time()
value, parts, st = sv.reduced_value(
    BubbleParams(center=HPoint(0, 0, 0), scale=2.83), ball(0.05),
    tol=1e-5, n_gl=5)
print(f"[cell tol=1e-5] {time.time() - t0:.1f}s, outer {st.iterations}, "
      f"krylov {st.krylov_iterations}, J-flat {value - 4 * np.pi ** 2:.5e}")

# vacuous scan sanity (fast path)
res0 = scan_window(ScanWindow(), zero_deformation(), solver=sv)
print(f"[d=0 scan] verdict {res0.verdict['verdict']}, "
      f"spread {res0.verdict['flat_spread']:.2e}")

# the real thing at s = 0.05
w = ScanWindow()
t0 = time.time()
res = scan_window(w, ball(0.05), solver=sv, tol=1e-5, n_gl=5)
dt = time.time() - t0
nc = res.verdict["cells"]
print(f"[scan s=0.05] {dt:.0f}s total, {dt / nc:.1f}s/cell, {nc} cells")
print(json.dumps({k: v for k, v in res.verdict.items()
                  if k not in ("window",)}, indent=1, default=str))

# landscape profile along lambda at the center column
for r in res.rows:
    if abs(r["x"]) < 1e-12 and abs(r["y"]) < 1e-12 and abs(r["t"]) < 1e-12:
        print(f"  lam {r['lambda']:6.3f}: J-flat "
              f"{r['value'] - 4 * np.pi ** 2: .5e} "
              f"({r['iterations']} outer, res {r['residual']:.1e})")

# margin scaling in s (one smaller s)
t0 = time.time()
res2 = scan_window(w, ball(0.025), solver=sv, tol=1e-6, n_gl=5)
print(f"[scan s=0.025] {time.time() - t0:.0f}s, margin "
      f"{res2.verdict.get('margin'):.4e} vs {res.verdict.get('margin'):.4e}")
m1, m2 = res.verdict["margin"], res2.verdict["margin"]
if m1 > 0 and m2 > 0:
    print(f"[margin slope] {np.log(m1 / m2) / np.log(2.0):.3f} "
          "(expect near 2)")
