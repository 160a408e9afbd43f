"""Dev check I: grid-convergence probe for the small-scale window cells.

The window cells at scale 2..4 pull the gluing ball back to radius
0.4..0.8, which a half-width-8 grid at nx = 45..57 barely resolves.
This probe re-solves center-column cells on a half-width-5 box at three
resolutions to see which landscape features survive refinement.
"""

import time

import numpy as np

from cryamabe.bubbles import BubbleParams
from cryamabe.deform import GluingSpec, glued_deformation
from cryamabe.heis import HPoint
from cryamabe.reduce import GridSpec, ReductionSolver

LAMBDAS = (2.0, 2.7, 3.63, 4.9)
D = glued_deformation(GluingSpec(
    centers=(HPoint(0.0, 0.0, 0.0),), radii=(0.1,),
    amplitudes=(0.05,), annulus_factor=2.0))

for nx, nt in ((57, 45), (81, 63), (99, 79)):
    grid = GridSpec(5.0, nx, nx, nt)
    t0 = time.time()
    sv = ReductionSolver(grid)
    sv._ensure_preconditioner()
    print(f"[grid {nx}x{nx}x{nt} L=5] h={grid.hx:.3f} "
          f"setup {time.time() - t0:.0f}s", flush=True)
    for lam in LAMBDAS:
        t0 = time.time()
        val, parts, st = sv.reduced_value(
            BubbleParams(center=HPoint(0, 0, 0), scale=lam), D,
            tol=1e-6, n_gl=5)
        print(f"  lam {lam:5.2f}: J-flat {val - 4 * np.pi ** 2:+.5e} "
              f"T0 {parts['deformation_self']:+.4e} "
              f"pen {4 * parts['norm_sq'] + parts['cross'] + parts['deformation_v'] + parts['nonlinear']:+.4e} "
              f"|v| {st.norm_v:.4f} ({st.iterations} outer, "
              f"{time.time() - t0:.0f}s)", flush=True)
