"""Dev check F: grid operator, multigrid, floors, preconditioner."""

import time

import numpy as np
import scipy.sparse.linalg as spla

from cryamabe.bubbles import bubble_constant, bubble_field
from cryamabe.quad import volume_normalization
from cryamabe.reduce import (GridField, GridSpec, PoissonOperator,
                             ReductionSolver, solve_poisson)

# 1. symmetry and positivity on a small grid
small = GridSpec(half_width=8.0, nx=25, ny=25, nt=19)
t0 = time.time()
op = PoissonOperator(small)
print(f"[assembly small] {time.time() - t0:.2f}s, "
      f"n={op.matrix.shape[0]}, nnz={op.matrix.nnz}")
asym = abs(op.matrix - op.matrix.T).max()
print(f"[symmetry] max |M - M^T| = {asym:.3e}")
lam_min = spla.eigsh(op.matrix, k=1, which="SA",
                     return_eigenvectors=False, tol=1e-6)[0]
print(f"[spd] smallest eigenvalue = {lam_min:.6e}")

# 2. constant boundary data reproduces the constant
u = solve_poisson(GridField(small, np.zeros(small.size)), bc=3.7,
                  operator=op)
print(f"[constant bc] max |u - 3.7| = {np.abs(u.values - 3.7).max():.3e}")

# 3. manufactured solution: the exact bubble with its own tail as bc
U = bubble_field()
c1 = bubble_constant()
kappa = volume_normalization()


def bubble_case(grid):
    opg = PoissonOperator(grid)
    pts = grid.points()
    jets = U.jet2(pts)
    exact = jets.u.real
    rhs = jets.Delta0u.real          # = -U^3 / c1^2 analytically
    ub = U.values(opg.boundary_points).real
    sol = solve_poisson(GridField(grid, rhs), bc=ub, operator=opg,
                        rtol=1e-11)
    err = sol.values - exact
    # X-seminorm of the error via the energy matrix
    en = float(err @ (opg.matrix @ err))
    return np.abs(err).max(), np.sqrt(max(en, 0.0)), opg


for gs in (GridSpec(8.0, 21, 21, 15), GridSpec(8.0, 43, 43, 31),
           GridSpec(8.0, 87, 87, 63)):
    t0 = time.time()
    emax, een, _ = bubble_case(gs)
    print(f"[manufactured] grid {gs.nx}x{gs.ny}x{gs.nt}: "
          f"max err {emax:.4e}, energy err {een:.4e} "
          f"({time.time() - t0:.1f}s)")

# 4. default grid: assembly + AMG setup + solve timings, gradient floor
for spec in (GridSpec(8.0, 45, 45, 35), GridSpec(8.0, 57, 57, 45),
             GridSpec(8.0, 63, 63, 49)):
    t0 = time.time()
    sv = ReductionSolver(spec)
    t_build = time.time() - t0
    t0 = time.time()
    rhs = 2.0 * sv.U3
    x = sv.op.solve_spd(rhs, rtol=1e-10)
    t_solve = time.time() - t0
    t0 = time.time()
    x2 = sv.op.solve_spd(rhs, x0=0.99 * x, rtol=1e-10)
    t_warm = time.time() - t0
    floor = sv.gradient_floor()
    nU = sv.x_norm(sv.U)
    print(f"[grid {spec.nx}x{spec.ny}x{spec.nt}] build {t_build:.1f}s, "
          f"solve {t_solve:.2f}s, warm {t_warm:.2f}s, "
          f"|U|_X = {nU:.4f} (exact {np.sqrt(8 * np.pi ** 2):.4f}), "
          f"floor/|U|_X = {floor / nU:.2e}")

# 5. preconditioner spectrum on the middle grid
sv = ReductionSolver(GridSpec(8.0, 57, 57, 45))
t0 = time.time()
sv._ensure_preconditioner()
P = sv._precond
print(f"[lanczos] {time.time() - t0:.1f}s, kept {len(P['theta'])} modes, "
      f"theta top: {np.sort(P['theta'])[::-1][:8]}")
