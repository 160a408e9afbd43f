"""Deformation fields f defining the perturbed CR structure Z + f Zb.

Admissible deformations keep |f| < 1 (ellipticity of the Levi form).
Two constructions are provided: the globally defined Rossi field
f = s * phi with the unimodular ratio

    phi(z, t) = ((t - i(1+|z|^2)) / (t + i(1+|z|^2)))^3,

and compactly supported gluings s_k * chi(|x_k^{-1} p| / r_k) * phi(p)
on disjoint gauge balls, where chi is a C^2 radial cutoff equal to 1 on
[0, 1] and 0 from the annulus factor A on.  The cutoff profile is the
quintic smoothstep complement, the minimal polynomial with two vanishing
derivatives at both seams; the gluing keeps phi's phase on the annulus
and tapers only the modulus (the source construction does not pin the
phase there, so this is a recorded choice).

Evaluation is piecewise with masked AD: each region's branch is only
evaluated on its own points, so the gauge-norm jet (not differentiable
at the ball center) never sees the center.  Builders therefore require
flat point batches.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from ._ad import Jet
from .errors import GluingOverlapError, NonCRDeformationError
from .heis import HPoint, KoranyiBall, balls_disjoint, dilate
from .jets import FrameJet2, ScalarField, gamma2_norm_estimate

__all__ = [
    "Deformation",
    "GluingSpec",
    "DeformationReport",
    "rossi_phi",
    "rossi_phi_builder",
    "rossi_deformation",
    "glued_deformation",
    "rescale_deformation",
    "zero_deformation",
    "validate_deformation",
    "CUTOFF_PROFILES",
]


def _zero_like(template: Jet) -> Jet:
    shape = template.v.shape
    g = None if template.g is None else np.zeros(shape + (3,), complex)
    h = None if template.h is None else np.zeros(shape + (3, 3), complex)
    return Jet(np.zeros(shape, complex), g, h)


def _scatter(target: Jet, mask: np.ndarray, piece: Jet) -> None:
    target.v[mask] = piece.v
    if target.g is not None:
        target.g[mask] = piece.g
    if target.h is not None:
        target.h[mask] = piece.h


def rossi_phi_builder(xj: Jet, yj: Jet, tj: Jet) -> Jet:
    """The unimodular cube (conj(D)/D)^3 with D = t + i(1+|z|^2)."""
    denom = tj + 1j * (1.0 + xj * xj + yj * yj)
    return (denom.conj() / denom) ** 3


_rossi_field = ScalarField(rossi_phi_builder, name="rossi_phi")


def rossi_phi(p) -> np.ndarray:
    """Value of the Rossi ratio at points; |phi| = 1 everywhere."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    out = _rossi_field.values(p)
    return out[0] if out.shape == (1,) else out


# -- cutoff profiles ---------------------------------------------------

def _quintic_complement(u: Jet) -> Jet:
    # 1 - (6u^5 - 15u^4 + 10u^3): C^2 with flat ends on [0, 1]
    u3 = u * u * u
    return 1.0 - u3 * (u * (u * 6.0 - 15.0) + 10.0)


#: named C^2 bump profiles chi on [0, 1] -> [1, 0]
CUTOFF_PROFILES = {"quintic": _quintic_complement}


@dataclasses.dataclass(frozen=True)
class GluingSpec:
    """Centers, radii and amplitudes of a multi-ball gluing."""

    centers: tuple[HPoint, ...]
    radii: tuple[float, ...]
    amplitudes: tuple[float, ...]
    annulus_factor: float = 2.0
    profile: str = "quintic"

    def __post_init__(self):
        k = len(self.centers)
        if not (k == len(self.radii) == len(self.amplitudes)):
            raise ValueError("centers, radii, amplitudes must have equal length")
        if k == 0:
            raise ValueError("at least one ball required")
        if self.annulus_factor <= 1.0:
            raise ValueError("annulus factor must exceed 1 for a C^2 taper")
        if self.profile not in CUTOFF_PROFILES:
            raise ValueError(f"unknown cutoff profile {self.profile!r}")
        for r in self.radii:
            if r <= 0:
                raise ValueError("radii must be positive")
        for s in self.amplitudes:
            if abs(s) >= 1.0:
                raise NonCRDeformationError(
                    f"amplitude {s} violates |f| < 1")
        balls = self.support_balls()
        for i in range(k):
            for j in range(i + 1, k):
                if not balls_disjoint(balls[i], balls[j]):
                    raise GluingOverlapError(
                        f"support balls {i} and {j} overlap")

    def support_balls(self) -> list[KoranyiBall]:
        return [KoranyiBall(c, self.annulus_factor * r)
                for c, r in zip(self.centers, self.radii)]


@dataclasses.dataclass(frozen=True)
class Deformation:
    """An admissible deformation field with its certified bounds.

    sup_bound is a constructive upper bound on sup |f| (|phi| = 1 makes
    it exact for the library constructions).  support_radius is the
    radius of an origin-centred gauge ball containing the support
    (math.inf for globally supported fields).
    """

    field: ScalarField
    sup_bound: float
    support_radius: float
    support_balls: tuple[KoranyiBall, ...] = ()
    label: str = ""

    @property
    def is_zero(self) -> bool:
        return self.sup_bound == 0.0

    def jet2(self, points) -> FrameJet2:
        return self.field.jet2(points)


def zero_deformation() -> Deformation:
    fld = ScalarField(lambda xj, yj, tj: _zero_like(xj), name="zero")
    return Deformation(field=fld, sup_bound=0.0, support_radius=0.0,
                       label="zero")


def rossi_deformation(s: float) -> Deformation:
    """Global deformation f = s * phi; requires |s| < 1."""
    s = float(s)
    if abs(s) >= 1.0:
        raise NonCRDeformationError(
            f"|s| = {abs(s)} >= 1 breaks the Levi form")
    if s == 0.0:
        return zero_deformation()

    def builder(xj, yj, tj):
        return s * rossi_phi_builder(xj, yj, tj)

    return Deformation(field=ScalarField(builder, name=f"rossi(s={s:g})"),
                       sup_bound=abs(s), support_radius=math.inf,
                       label=f"rossi s={s:g}")


def glued_deformation(spec: GluingSpec) -> Deformation:
    """Compactly supported f agreeing with s_k * phi on each inner ball."""
    chi = CUTOFF_PROFILES[spec.profile]
    A = spec.annulus_factor

    def builder(xj, yj, tj):
        if xj.v.ndim != 1:
            raise ValueError("glued deformation requires flat point batches")
        out = _zero_like(xj + yj * 1j)  # complex zero jet, right order
        x = xj.v.real
        y = yj.v.real
        t = tj.v.real
        for center, r, s in zip(spec.centers, spec.radii, spec.amplitudes):
            cx, cy, ct = center.x, center.y, center.t
            # coordinates of center^{-1} p (values only, for the masks)
            qx = x - cx
            qy = y - cy
            qt = t - ct - 2.0 * (cy * x - cx * y)
            rho = ((qx * qx + qy * qy) ** 2 + qt * qt) ** 0.25
            inner = rho <= r
            band = (rho > r) & (rho < A * r)
            if np.any(inner):
                sub = s * rossi_phi_builder(xj[inner], yj[inner], tj[inner])
                _scatter(out, inner, sub)
            if np.any(band):
                xb, yb, tb = xj[band], yj[band], tj[band]
                qxj = xb - cx
                qyj = yb - cy
                qtj = tb - ct - 2.0 * (cy * xb - cx * yb)
                norm4 = (qxj * qxj + qyj * qyj) ** 2 + qtj * qtj
                rho_j = norm4.real_pow(0.25)
                u = (rho_j * (1.0 / r) - 1.0) * (1.0 / (A - 1.0))
                sub = (s * chi(u)) * rossi_phi_builder(xb, yb, tb)
                _scatter(out, band, sub)
        return out

    balls = tuple(spec.support_balls())
    # a gauge ball at the origin containing every support ball, via the
    # triangle inequality of the gauge
    reach = max(b.center.norm() + b.radius for b in balls)
    smax = max(abs(s) for s in spec.amplitudes)
    return Deformation(field=ScalarField(builder, name="glued"),
                       sup_bound=smax, support_radius=reach,
                       support_balls=balls, label="glued")


def rescale_deformation(d: Deformation, anchor: HPoint,
                        lam: float) -> Deformation:
    """The deformation seen from bubble-adapted coordinates.

    The structure Z + f Zb is equivariant under left translations and
    dilations with f transforming as a scalar, so studying the family
    member at (anchor, lam) against f is the same as studying the
    member at (e, 1) against the pullback of f through
    p = anchor * delta_{1/lam}(p').  Gauge radii of the support scale
    by lam, the amplitude bound is unchanged, and the Rossi phase is
    evaluated through the composed map (it is not dilation invariant).
    """
    lam = float(lam)
    if lam <= 0:
        raise ValueError(f"scale must be positive, got {lam}")
    if d.is_zero or (anchor == HPoint(0.0, 0.0, 0.0) and lam == 1.0):
        return d
    ax, ay, at = anchor.x, anchor.y, anchor.t
    mu = 1.0 / lam
    inner = d.field.builder

    def builder(xj, yj, tj):
        px = ax + mu * xj
        py = ay + mu * yj
        pt = at + (mu * mu) * tj + (2.0 * mu) * (ay * xj - ax * yj)
        return inner(px, py, pt)

    ainv = anchor.inv()
    balls = tuple(
        KoranyiBall(HPoint.from_array(dilate(lam, (ainv * b.center).as_array())),
                    lam * b.radius)
        for b in d.support_balls)
    if math.isinf(d.support_radius):
        reach = math.inf
    elif balls:
        reach = max(b.center.norm() + b.radius for b in balls)
    else:
        reach = lam * (anchor.norm() + d.support_radius)
    return Deformation(field=ScalarField(builder,
                                         name=d.field.name + "_pulled"),
                       sup_bound=d.sup_bound, support_radius=reach,
                       support_balls=balls,
                       label=d.label + "|adapted")


@dataclasses.dataclass(frozen=True)
class DeformationReport:
    sup_f: float
    gamma2_estimate: float
    support_ok: bool
    sup_bound_respected: bool
    alpha: float | None
    passes: bool


def validate_deformation(d: Deformation, probes,
                         alpha: float | None = None) -> DeformationReport:
    """Probe-cloud checks: sup |f|, Gamma^2 estimate, support containment.

    Failures are reported, not raised; alpha (if given) is the smallness
    threshold the Gamma^2 estimate is compared against.
    """
    probes = np.asarray(probes, dtype=float)
    if probes.ndim != 2 or probes.shape[0] == 0:
        raise ValueError("probes must be a nonempty (N, 3) array")
    fj = d.field.jet2(probes)
    sup_f = float(np.max(np.abs(fj.v))) if probes.size else 0.0
    g2 = gamma2_norm_estimate(fj)
    if math.isinf(d.support_radius):
        support_ok = True
    else:
        rho = ((probes[:, 0] ** 2 + probes[:, 1] ** 2) ** 2
               + probes[:, 2] ** 2) ** 0.25
        outside = rho > d.support_radius * (1 + 1e-12)
        support_ok = bool(np.all(np.abs(fj.v[outside]) == 0.0))
    bound_ok = sup_f <= d.sup_bound + 1e-12
    passes = support_ok and bound_ok and sup_f < 1.0 and (
        alpha is None or g2 <= alpha)
    return DeformationReport(sup_f=sup_f, gamma2_estimate=g2,
                             support_ok=support_ok,
                             sup_bound_respected=bound_ok,
                             alpha=alpha, passes=passes)
