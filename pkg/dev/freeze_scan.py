"""Run the acceptance-scale window scan once and print the verdict.

Freezes the numbers (margin, noise, gradient transfer, timing) that the
acceptance suite asserts against.  Same instance as the acceptance test:
one factor-4 annulus ball of radius 0.15, amplitude 0.05, scanned on a
3x3x3x3 window with the compact tall-t grid.
"""

import json
import time

from cryamabe.deform import GluingSpec, glued_deformation
from cryamabe.heis import HPoint
from cryamabe.reduce import GridSpec, ScanWindow, default_solver, scan_window

t0 = time.time()
spec = GluingSpec(centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.15,),
                  amplitudes=(0.05,), annulus_factor=4.0)
d = glued_deformation(spec)
grid = GridSpec(3.0, 61, 61, 49, half_width_t=3.5)
solver = default_solver(grid)
print(f"solver built in {time.time() - t0:.1f}s", flush=True)

window = ScanWindow(shape=(3, 3, 3, 3))
t1 = time.time()
res = scan_window(window, d, solver=solver, tol=1e-4, max_outer=12, n_gl=5)
dt = time.time() - t1
print(f"scan finished in {dt:.1f}s ({dt / len(res.rows):.2f}s per cell)")
print(json.dumps(res.verdict, indent=2, default=str))
vals = sorted((r["value"], r["lambda"], r["x"], r["y"], r["t"])
              for r in res.rows if r["cell_status"] == "ok")
print("top five cells:")
for v, lam, x, y, t in vals[-5:]:
    print(f"  lam={lam:.4f} x={x:+.3f} y={y:+.3f} t={t:+.3f}  "
          f"value={v:.8f}")
print("iteration stats:",
      sorted(r["iterations"] for r in res.rows if r["cell_status"] == "ok"))
