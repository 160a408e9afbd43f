"""Dev check B: rule accuracy for the bubble quartic norm, kappa, timing."""
import math
import time

import numpy as np

from cryamabe.quad import (product_rule, integrate, tail_fraction,
                           calibrate_volume_normalization, x_inner)
from cryamabe.bubbles import bubble_field, BubbleParams, tangent_basis
from cryamabe.heis import HPoint

target_leb = math.pi ** 2  # c1^4 * pi^2 / 4 with c1^4 = 4

u = bubble_field()
f4 = lambda p: u.values(p).real ** 4

print("== rule size / accuracy sweep for Lebesgue int U^4 = pi^2 ==")
for n_gl, xb, tb in [
    (6, (0.5, 1.2, 3.0, 8.0), (0.6, 1.5, 4.0, 10.0)),
    (8, (0.5, 1.2, 3.0, 8.0), (0.6, 1.5, 4.0, 10.0)),
    (10, (0.5, 1.2, 3.0, 8.0), (0.6, 1.5, 4.0, 10.0)),
    (8, (0.4, 0.9, 1.8, 3.6, 8.0), (0.5, 1.2, 2.8, 6.5, 14.0)),
    (10, (0.4, 0.9, 1.8, 3.6, 8.0), (0.5, 1.2, 2.8, 6.5, 14.0)),
]:
    rule = product_rule(n_gl=n_gl, x_breaks=xb, t_breaks=tb)
    t0 = time.perf_counter()
    val = integrate(f4, rule, lebesgue=True)
    dt = time.perf_counter() - t0
    tf = tail_fraction(f4, rule)
    print(f"  n_gl={n_gl:2d} size={rule.size:8d} rel_err={abs(val-target_leb)/target_leb:.3e}"
          f" tail={tf:.1e} time={dt*1e3:.0f}ms")

print("== kappa calibration ==")
rep = calibrate_volume_normalization()
print(f"  kappa={rep.kappa} leb={rep.lebesgue_quartic:.12f} mismatch={rep.relative_mismatch:.3e}"
      f" size={rep.rule_size}")

print("== invariance of L4 mass on a FIXED rule, moderate (x, lam) ==")
rule = product_rule(n_gl=12, x_breaks=(0.4, 0.9, 1.8, 3.6, 8.0),
                    t_breaks=(0.5, 1.2, 2.8, 6.5, 14.0))
rng = np.random.default_rng(3)
for _ in range(4):
    x = HPoint(*rng.uniform(-0.3, 0.3, 2), rng.uniform(-0.3, 0.3))
    lam = float(rng.uniform(0.8, 1.25))
    ub = bubble_field(BubbleParams(x, lam))
    val = integrate(lambda p: ub.values(p).real ** 4, rule)
    print(f"  x=({x.x:+.2f},{x.y:+.2f},{x.t:+.2f}) lam={lam:.3f} "
          f"rel_err={abs(val - 4*math.pi**2)/(4*math.pi**2):.2e}")

print("== concentrated bubble on two-scale rule ==")
for lam in (2.0, 4.0):
    ub = bubble_field(BubbleParams(HPoint(0.15, -0.1, 0.05), lam))
    r1 = product_rule(center=(0.15, -0.1, 0.05), n_gl=12,
                      x_breaks=(0.4, 0.9, 1.8, 3.6, 8.0),
                      t_breaks=(0.5, 1.2, 2.8, 6.5, 14.0))
    r2 = product_rule(center=(0.15, -0.1, 0.05), n_gl=12,
                      x_breaks=(0.4, 0.9, 1.8, 3.6, 8.0),
                      t_breaks=(0.5, 1.2, 2.8, 6.5, 14.0),
                      extra_scales=(1.0 / lam,))
    for tag, r in (("plain", r1), ("two-scale", r2)):
        val = integrate(lambda p: ub.values(p).real ** 4, r)
        print(f"  lam={lam} {tag:9s} size={r.size:8d} "
              f"rel_err={abs(val - 4*math.pi**2)/(4*math.pi**2):.2e}")

print("== X inner product of tangent fields (Gram diag scaling probe) ==")
tf1 = tangent_basis(BubbleParams())
rule_s = product_rule(n_gl=10, x_breaks=(0.4, 0.9, 1.8, 3.6, 8.0),
                      t_breaks=(0.5, 1.2, 2.8, 6.5, 14.0))
t0 = time.perf_counter()
g00 = x_inner(tf1["z_re"], tf1["z_re"], rule_s)
g33 = x_inner(tf1["dilation"], tf1["dilation"], rule_s)
g03 = x_inner(tf1["z_re"], tf1["dilation"], rule_s)
dt = time.perf_counter() - t0
print(f"  <zre,zre>={g00:.6f} <dil,dil>={g33:.6f} <zre,dil>={g03:.2e} ({dt:.2f}s)")
