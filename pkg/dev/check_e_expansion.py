"""Dev check E: linear term l, I_def(s, lambda) table, glued linear forcing."""
import sys, time
sys.path.insert(0, "/root/pkg/src")
import numpy as np

from cryamabe.bubbles import bubble_field, tangent_basis, BubbleParams
from cryamabe.deform import (rossi_deformation, glued_deformation, GluingSpec,
                             rossi_phi_builder)
from cryamabe.heis import HPoint
from cryamabe.jets import ScalarField
from cryamabe.quad import product_rule, integrate, volume_normalization
from cryamabe.webster import l_difference_from_jets

# --- l field: linear-in-s part of (L_{J_s} - L_0) U, global Rossi ----
phi = ScalarField(rossi_phi_builder, name="phi")
U = bubble_field(BubbleParams())

def l_values(points):
    points = np.asarray(points, dtype=float)
    P = phi.jet2(points)
    Uj = U.jet2(points)
    lead = -4.0 * (P.u * Uj.ZbZbu + np.conj(P.u) * Uj.ZZu
                   + np.conj(P.Zbu) * Uj.Zu + P.Zbu * Uj.Zbu)
    # wait: Zb f with f = phi gives Zphi-bar term handling below
    r1 = -(np.conj(P.ZbZbu) + P.ZbZbu)  # placeholder, fixed below
    return lead, r1, P, Uj

# careful version: l = -4[phi Zb^2 U + conj(phi) Z^2 U + Z(conj phi) ZU
#                        + Zb(phi) Zb U] - (Zb^2 phi + Z^2 conj(phi)) U
def l_field(points):
    points = np.asarray(points, dtype=float)
    P = phi.jet2(points)
    Uj = U.jet2(points)
    z_conjphi = np.conj(P.Zbu)          # Z conj(phi) = conj(Zb phi)
    zb_phi = P.Zbu
    lead = -4.0 * (P.u * Uj.ZbZbu + np.conj(P.u) * Uj.ZZu
                   + z_conjphi * Uj.Zu + zb_phi * Uj.Zbu)
    r1 = -(P.ZbZbu + np.conj(P.ZbZbu))  # Zb^2 phi + Z^2 conj(phi)
    return lead + r1 * Uj.u

pt = np.array([[1.0, 0.0, 0.0]])
lv = l_field(pt)
print(f"l(1,0,0) = {lv[0]:.12f}   (3 sqrt2 = {3*np.sqrt(2):.12f})")

# cross-check against s-derivative of the full kernel
d1 = rossi_deformation(1e-6)
F = d1.jet2(pt)
Uj = U.jet2(pt)
ld = l_difference_from_jets(F, Uj) / 1e-6
print(f"FD-in-s linear part at (1,0,0): {ld[0]:.10f}")

rng = np.random.default_rng(3)
pp = np.empty((20, 3))
pp[:, 0] = rng.uniform(-2, 2, 20)
pp[:, 1] = rng.uniform(-2, 2, 20)
pp[:, 2] = rng.uniform(-3, 3, 20)
lv20 = l_field(pp)
F20 = rossi_deformation(1e-6).jet2(pp)
ld20 = l_difference_from_jets(F20, U.jet2(pp)) / 1e-6
print(f"l vs FD-in-s at 20 pts: max diff {np.max(np.abs(lv20 - ld20)):.3e}, "
      f"imag leak {np.max(np.abs(lv20.imag)):.3e}")

# --- int U l  (parity says zero) -------------------------------------
rule = product_rule(center=(0.0, 0.0, 0.0), scale=1.0, n_gl=10)
print(f"rule size {rule.size}")
t0 = time.time()
Uv = U.values(rule.nodes)
lint = integrate(Uv * l_field(rule.nodes).real, rule)
print(f"int U l = {lint:.3e}  ({time.time()-t0:.1f}s)")

# --- I_def(s, lambda) table -----------------------------------------
print("== I_def(s, lam) = J_{J_s}(U_lam) - 4pi^2, exact at v=0 ==")
print(f"    16 pi^2 s^2/(1-s^2) at s=0.05: {16*np.pi**2*0.0025/0.9975:.6f}")


def I_def(s, lam, n_gl=8):
    r = product_rule(center=(0.0, 0.0, 0.0), scale=1.0, n_gl=n_gl,
                     extra_scales=(1.0 / lam,) if lam > 1.5 else ())
    d = rossi_deformation(s)
    Ub = bubble_field(BubbleParams(scale=lam))

    def kern(pts):
        Fj = d.jet2(pts)
        Uj2 = Ub.jet2(pts)
        return (Uj2.u * l_difference_from_jets(Fj, Uj2)).real

    return integrate(kern, r), r.size


for s in (0.02, 0.04, 0.08):
    v, n = I_def(s, 8.0)
    pred = 16 * np.pi ** 2 * s * s / (1 - s * s)
    print(f"  s={s:.2f} lam=8:  I={v:.8f}  pred_bulk={pred:.8f}  "
          f"ratio={v/pred:.6f}  (rule {n})")

vals = {}
for lam in (4.0, 8.0, 16.0):
    t0 = time.time()
    v, n = I_def(0.05, lam)
    vals[lam] = v
    print(f"  s=0.05 lam={lam:4.0f}: I={v:.10f}  (rule {n}, {time.time()-t0:.1f}s)")
l1 = np.log(vals[8.0] / vals[4.0]) / np.log(8.0 / 4.0)
l2 = np.log(vals[16.0] / vals[8.0]) / np.log(16.0 / 8.0)
print(f"  lambda-slopes: {l1:.4f}, {l2:.4f}")

# --- glued deformation: linear forcing and its tangential part ------
print("== glued linear forcing (ball r=0.8, A=2, center origin) ==")
spec = GluingSpec(centers=(HPoint(0, 0, 0),), radii=(0.8,), amplitudes=(1e-6,))
dg = glued_deformation(spec)
r2 = product_rule(center=(0.0, 0.0, 0.0), scale=1.0, n_gl=8)


def lg_values(pts):
    Fg = dg.jet2(pts)
    Uj2 = U.jet2(pts)
    return (l_difference_from_jets(Fg, Uj2) / 1e-6).real


lg = np.concatenate([lg_values(r2.nodes[i:i + 131072])
                     for i in range(0, r2.size, 131072)])
basis = tangent_basis(BubbleParams())
bv = {k: f.values(r2.nodes).real for k, f in basis.items()}
# L2(rule) Gram and projections
names = list(bv)
G = np.array([[integrate(bv[a] * bv[b], r2) for b in names] for a in names])
c = np.array([integrate(bv[a] * lg, r2) for a in names])
coef = np.linalg.solve(G, c)
proj = sum(coef[i] * bv[names[i]] for i in range(4))
l2_lg = np.sqrt(integrate(lg * lg, r2))
l2_perp = np.sqrt(max(integrate((lg - proj) * (lg - proj), r2), 0.0))
print(f"  ||l_g||_L2 = {l2_lg:.4f},  ||P_perp l_g||_L2 = {l2_perp:.4f}")
print(f"  tangent components: {dict(zip(names, np.round(coef, 6)))}")
print(f"  -> nonzero perp part means ||v||_X ~ s at small s")
