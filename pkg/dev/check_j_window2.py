"""Dev check J: wide-annulus window profile on the split box.

A gluing annulus of width 3r is resolvable at h ~ r, which the narrow
default factor 2 ball is not at any affordable grid.  This probes the
dilation profile of the reduced value for radius 0.15, factor 4, on two
resolutions of the compact scan box to test for a stable interior peak.
"""

import time

import numpy as np

from cryamabe.bubbles import BubbleParams
from cryamabe.deform import GluingSpec, glued_deformation
from cryamabe.heis import HPoint
from cryamabe.reduce import GridSpec, ReductionSolver

LAMBDAS = (0.6, 0.75, 0.95, 1.2, 1.5)
D = glued_deformation(GluingSpec(
    centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.15,),
    amplitudes=(0.05,), annulus_factor=4.0))

for nx, nt in ((61, 49), (77, 61)):
    grid = GridSpec(3.0, nx, nx, nt, half_width_t=3.5)
    t0 = time.time()
    sv = ReductionSolver(grid)
    sv._ensure_preconditioner()
    print(f"[grid {nx}x{nx}x{nt} L=3/3.5] hx={grid.hx:.3f} "
          f"ht={grid.ht:.3f} setup {time.time() - t0:.0f}s", flush=True)
    for lam in LAMBDAS:
        t0 = time.time()
        val, parts, st = sv.reduced_value(
            BubbleParams(center=HPoint(0, 0, 0), scale=lam), D,
            tol=1e-6, n_gl=5)
        pen = (4.0 * parts["norm_sq"] + parts["cross"]
               + parts["deformation_v"] + parts["nonlinear"])
        print(f"  lam {lam:5.2f}: J-flat {val - 4 * np.pi ** 2:+.5e} "
              f"T0 {parts['deformation_self']:+.4e} pen {pen:+.4e} "
              f"|v| {st.norm_v:.4f} ({st.iterations} outer, "
              f"{time.time() - t0:.0f}s)", flush=True)
