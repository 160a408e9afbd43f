"""Dev check C: webster package correctness + remainder slope measurement."""
import sys, time
sys.path.insert(0, "/root/pkg/src")
import numpy as np

from cryamabe.deform import (rossi_deformation, glued_deformation, GluingSpec,
                             zero_deformation, rossi_phi)
from cryamabe.heis import HPoint
from cryamabe.jets import ScalarField
from cryamabe.webster import (connection_form, structure_residuals,
                              dtheta1_coefficients, webster_curvature,
                              webster_curvature_fd, sublaplacian,
                              sublaplacian_fd, conformal_sublaplacian,
                              curvature_readings)
from cryamabe.bubbles import bubble_field, BubbleParams

rng = np.random.default_rng(7)
pts = np.empty((200, 3))
pts[:, 0] = rng.uniform(-2, 2, 200)
pts[:, 1] = rng.uniform(-2, 2, 200)
pts[:, 2] = rng.uniform(-4, 4, 200)

d = rossi_deformation(0.3)

print("== structure equation residuals (rossi s=0.3, 200 pts) ==")
res = structure_residuals(d, pts)
for k, v in res.items():
    print(f"  {k:14s} {v:.3e}")

print("== glued deformation structure residuals ==")
spec = GluingSpec(centers=(HPoint(0.2, -0.1, 0.3),), radii=(0.8,),
                  amplitudes=(0.25,))
dg = glued_deformation(spec)
# probe cloud concentrated around the ball (inner, band, outside)
gp = np.empty((300, 3))
gp[:, 0] = rng.uniform(-2.5, 2.5, 300)
gp[:, 1] = rng.uniform(-2.5, 2.5, 300)
gp[:, 2] = rng.uniform(-3, 3, 300)
resg = structure_residuals(dg, gp)
for k, v in resg.items():
    print(f"  {k:14s} {v:.3e}")

# test field: complex smooth decaying-ish field with nontrivial jets
def test_builder(xj, yj, tj):
    zz = xj + 1j * yj
    g = tj * tj + (1.0 + xj * xj + yj * yj) ** 2
    return (1.0 + 0.7 * zz + 0.3j * tj + 0.2 * zz * zz) * g.real_pow(-0.5)

u_cplx = ScalarField(test_builder, name="test")
U = bubble_field(BubbleParams())

print("== sublaplacian three paths (rossi, complex field, 200 pts) ==")
vals = {m: sublaplacian(d, u_cplx, pts, method=m)
        for m in ("defining", "closed", "divergence")}
scale = np.max(np.abs(vals["defining"]))
for a in ("closed", "divergence"):
    diff = np.max(np.abs(vals[a] - vals["defining"])) / scale
    print(f"  defining vs {a:10s}: rel {diff:.3e}")

print("== sublaplacian three paths (glued, bubble, 300 pts) ==")
valsg = {m: sublaplacian(dg, U, gp, method=m)
         for m in ("defining", "closed", "divergence")}
scaleg = np.max(np.abs(valsg["defining"]))
for a in ("closed", "divergence"):
    diff = np.max(np.abs(valsg[a] - valsg["defining"])) / scaleg
    print(f"  defining vs {a:10s}: rel {diff:.3e}")

print("== AD kernels vs all-FD path (rossi, 30 pts) ==")
sub = pts[:30]
ad = sublaplacian(d, u_cplx, sub, method="closed")
fd = sublaplacian_fd(d, u_cplx, sub, method="closed", step=2e-3)
print(f"  max rel diff: {np.max(np.abs(ad - fd)) / np.max(np.abs(ad)):.3e}")

print("== zero deformation reduces to Delta0 ==")
d0 = zero_deformation()
v0 = sublaplacian(d0, U, sub, method="defining")
Uj = U.jet2(sub)
print(f"  max |Delta_J0 - Delta0|: {np.max(np.abs(v0 - Uj.Delta0u)):.3e}")

print("== conformal operator on bubble at f=0: L0 U - 2U^3 ==")
lu = conformal_sublaplacian(d0, U, sub)
print(f"  max |L0 U - 2U^3|: {np.max(np.abs(lu - 2 * Uj.u.real ** 3)):.3e}")

print("== curvature: imag leak, FD cross-check (rossi s=0.3) ==")
cv = webster_curvature(d, pts)
print(f"  imag leak: {cv.imag_leak:.3e}")
t0 = time.time()
rfd = webster_curvature_fd(d, pts[:30], step=2e-3)
print(f"  R_fd vs R_exact max rel: "
      f"{np.max(np.abs(rfd - cv.R_exact[:30])) / np.max(np.abs(cv.R_exact[:30])):.3e}"
      f"  ({time.time()-t0:.2f}s)")

print("== curvature on glued ==")
cvg = webster_curvature(dg, gp)
print(f"  imag leak: {cvg.imag_leak:.3e}, sup |R|: {np.max(np.abs(cvg.R_exact)):.4f}")
rfdg = webster_curvature_fd(dg, gp[:20], step=1e-3)
print(f"  R_fd vs R_exact max abs: {np.max(np.abs(rfdg - cvg.R_exact[:20])):.3e}")

print("== remainder |R_exact - R_leading| slope in s ==")
probe_sets = {
    "origin": np.array([[0.0, 0.0, 0.0]]),
    "generic": np.array([[1.0, 0.5, -0.7]]),
    "cloud200": pts,
}
svals = [1e-1, 1e-2, 1e-3]
for name, pp in probe_sets.items():
    rems = []
    for s in svals:
        cvs = webster_curvature(rossi_deformation(s), pp)
        r = cvs.remainder if pp.shape[0] == 1 else np.max(cvs.remainder)
        rems.append(float(np.max(r)))
    l1 = np.log10(rems[0] / rems[1])
    l2 = np.log10(rems[1] / rems[2])
    print(f"  {name:9s} remainders {rems[0]:.3e} {rems[1]:.3e} {rems[2]:.3e}"
          f"  slopes {l1:.3f}, {l2:.3f}")

print("== readings of the bracket at s=0.1 (for the ledger) ==")
rd = curvature_readings(rossi_deformation(0.1), pts[:50])
ex = rd["exact"]
for k in ("corrected", "first_term_order_one", "mixed_term_zb_squared"):
    print(f"  |exact - {k:22s}| sup = {np.max(np.abs(ex - rd[k])):.3e}")

print("== connection at f=0 and f=const sanity ==")
c0 = connection_form(zero_deformation(), HPoint(0.5, -0.2, 1.0))
print(f"  zero: levi={c0.levi}, |om|={abs(c0.omega_theta)+abs(c0.omega_1)+abs(c0.omega_1bar):.1e}")
co = dtheta1_coefficients(d, HPoint(0.5, -0.2, 1.0))
cf = connection_form(d, HPoint(0.5, -0.2, 1.0))
print(f"  dtheta1 coeffs vs (om1b, -om_theta, A): "
      f"{abs(co[0]-cf.omega_1bar):.2e} {abs(co[1]+cf.omega_theta):.2e} "
      f"{abs(co[2]-cf.torsion):.2e}")
