"""Dev check K: does the reduced value turn over once the bubble sits
deep inside the glued ball?

Narrow ball (r=0.1, factor 2) so the rescaled support stays compact.
Large dilation is the cheap regime here: the annulus width grows like
0.1*lam in the rescaled frame, and only the box height has to chase the
parabolic reach of the support ball.  Per-dilation grids keep the
support inside the box.  The two candidate behaviours differ by ~50x at
lam=16, so coarse tolerances are enough.
"""

import time

import numpy as np

from cryamabe.bubbles import BubbleParams
from cryamabe.deform import GluingSpec, glued_deformation
from cryamabe.heis import HPoint
from cryamabe.reduce import GridSpec, ReductionSolver

D = glued_deformation(GluingSpec(
    centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.1,),
    amplitudes=(0.05,), annulus_factor=2.0))

CASES = (
    (4.0, GridSpec(3.0, 61, 61, 49, half_width_t=3.5)),
    (7.0, GridSpec(3.0, 61, 61, 101, half_width_t=7.0)),
    (10.0, GridSpec(3.2, 65, 65, 161, half_width_t=13.0)),
    (16.0, GridSpec(4.0, 65, 65, 321, half_width_t=32.0)),
)

for lam, grid in CASES:
    t0 = time.time()
    sv = ReductionSolver(grid)
    sv._ensure_preconditioner()
    setup = time.time() - t0
    t0 = time.time()
    val, parts, st = sv.reduced_value(
        BubbleParams(center=HPoint(0, 0, 0), scale=lam), D,
        tol=1e-5, n_gl=5)
    pen = (4.0 * parts["norm_sq"] + parts["cross"]
           + parts["deformation_v"] + parts["nonlinear"])
    print(f"lam {lam:5.1f} [{grid.nx}x{grid.ny}x{grid.nt} "
          f"L={grid.half_width}/{grid.t_half_width} ht={grid.ht:.3f}] "
          f"J-flat {val - 4 * np.pi ** 2:+.5e} "
          f"T0 {parts['deformation_self']:+.4e} pen {pen:+.4e} "
          f"|v| {st.norm_v:.4f} ({st.iterations} outer, "
          f"setup {setup:.0f}s solve {time.time() - t0:.0f}s)", flush=True)
