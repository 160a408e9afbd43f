"""Exact frame calculus on the Heisenberg group.

The left-invariant frame used throughout is

    Z  = d/dz + i conj(z) d/dt,      Zb = d/dzb - i z d/dt,      T = d/dt,

with d/dz = (d/dx - i d/dy)/2, so [Z, Zb] = -2i T and the real legs are
X = d/dx + 2y d/dt, Y = d/dy - 2x d/dt (Z = (X - iY)/2).  The dilation
generator is Xi = z Z + zb Zb + 2t T = x d/dx + y d/dy + 2t d/dt.

FrameJet2 converts a coordinate 2-jet (value, gradient, Hessian in
(x, y, t)) into every frame derivative up to second order.  The raw jet
can come from forward-mode AD (exact) or from finite differences (the
independent oracle path); both feed the same conversion formulas.

FrameJet1 carries a field together with its first frame derivatives and
supports the product/quotient algebra of derivations, which is what the
divergence-form sublaplacian needs.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable

import numpy as np

from ._ad import Jet, coordinate_jets

__all__ = [
    "FrameJet2",
    "FrameJet1",
    "ScalarField",
    "fd_coord_jet",
    "fd_frame_jet2",
    "gamma2_norm_estimate",
]


class FrameJet2:
    """Value plus all frame derivatives of order <= 2 at a point batch.

    Frame second derivatives do not commute, so the full list is kept:
    ZZ, ZbZb, ZZb, ZbZ, TZ, TZb, TT.  Properties are cached; each is a
    complex ndarray over the batch.
    """

    def __init__(self, x, y, t, v, g, h):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.v = np.asarray(v, dtype=complex)
        self.g = np.asarray(g, dtype=complex)
        self.h = np.asarray(h, dtype=complex)

    @classmethod
    def from_jet(cls, points, jet: Jet) -> "FrameJet2":
        points = np.asarray(points, dtype=float)
        return cls(points[..., 0], points[..., 1], points[..., 2],
                   jet.v, jet.g, jet.h)

    # complex coordinates of the batch
    @cached_property
    def z(self):
        return self.x + 1j * self.y

    @cached_property
    def zb(self):
        return self.x - 1j * self.y

    # coordinate partials in complex form
    @cached_property
    def _uz(self):
        return 0.5 * (self.g[..., 0] - 1j * self.g[..., 1])

    @cached_property
    def _uzb(self):
        return 0.5 * (self.g[..., 0] + 1j * self.g[..., 1])

    @cached_property
    def _ut(self):
        return self.g[..., 2]

    @cached_property
    def _uzz(self):
        h = self.h
        return 0.25 * (h[..., 0, 0] - 2j * h[..., 0, 1] - h[..., 1, 1])

    @cached_property
    def _uzbzb(self):
        h = self.h
        return 0.25 * (h[..., 0, 0] + 2j * h[..., 0, 1] - h[..., 1, 1])

    @cached_property
    def _uzzb(self):
        h = self.h
        return 0.25 * (h[..., 0, 0] + h[..., 1, 1])

    @cached_property
    def _uzt(self):
        h = self.h
        return 0.5 * (h[..., 0, 2] - 1j * h[..., 1, 2])

    @cached_property
    def _uzbt(self):
        h = self.h
        return 0.5 * (h[..., 0, 2] + 1j * h[..., 1, 2])

    @cached_property
    def _utt(self):
        return self.h[..., 2, 2]

    # frame derivatives, first order
    @property
    def u(self):
        return self.v

    @cached_property
    def Zu(self):
        return self._uz + 1j * self.zb * self._ut

    @cached_property
    def Zbu(self):
        return self._uzb - 1j * self.z * self._ut

    @property
    def Tu(self):
        return self._ut

    @cached_property
    def Xiu(self):
        # dilation generator: Xi = z d/dz + zb d/dzb + 2t d/dt
        return self.z * self._uz + self.zb * self._uzb + 2.0 * self.t * self._ut

    # frame derivatives, second order
    @cached_property
    def ZZu(self):
        return self._uzz + 2j * self.zb * self._uzt - self.zb ** 2 * self._utt

    @cached_property
    def ZbZbu(self):
        return self._uzbzb - 2j * self.z * self._uzbt - self.z ** 2 * self._utt

    @cached_property
    def ZZbu(self):
        zz = self.z * self.zb
        return (self._uzzb - 1j * self._ut - 1j * self.z * self._uzt
                + 1j * self.zb * self._uzbt + zz * self._utt)

    @cached_property
    def ZbZu(self):
        zz = self.z * self.zb
        return (self._uzzb + 1j * self._ut + 1j * self.zb * self._uzbt
                - 1j * self.z * self._uzt + zz * self._utt)

    @cached_property
    def TZu(self):
        return self._uzt + 1j * self.zb * self._utt

    @cached_property
    def TZbu(self):
        return self._uzbt - 1j * self.z * self._utt

    @property
    def TTu(self):
        return self._utt

    @cached_property
    def Delta0u(self):
        """Flat sublaplacian (ZZb + ZbZ)/2 applied to the field."""
        return 0.5 * (self.ZZbu + self.ZbZu)

    # first-derivative packages of derived fields
    def jet1(self) -> "FrameJet1":
        return FrameJet1(self.v, self.Zu, self.Zbu, self.Tu)

    def jet1_Z(self) -> "FrameJet1":
        return FrameJet1(self.Zu, self.ZZu, self.ZbZu, self.TZu)

    def jet1_Zb(self) -> "FrameJet1":
        return FrameJet1(self.Zbu, self.ZZbu, self.ZbZbu, self.TZbu)

    def jet1_T(self) -> "FrameJet1":
        return FrameJet1(self.Tu, self.TZu, self.TZbu, self.TTu)

    def jet1_Xi(self) -> "FrameJet1":
        # frame derivatives of Xi u, using Xi u = z Zu + zb Zbu + 2t Tu
        # together with Z z = 1, Z t = i zb, Zb zb = 1, Zb t = -i z.
        z, zb, t = self.z, self.zb, self.t
        Zxi = (self.Zu + z * self.ZZu + zb * self.ZZbu
               + 2j * zb * self.Tu + 2.0 * t * self.TZu)
        Zbxi = (self.Zbu + z * self.ZbZu + zb * self.ZbZbu
                - 2j * z * self.Tu + 2.0 * t * self.TZbu)
        Txi = (z * self.TZu + zb * self.TZbu + 2.0 * self.Tu
               + 2.0 * t * self.TTu)
        return FrameJet1(self.Xiu, Zxi, Zbxi, Txi)

    def conj(self) -> "FrameJet2":
        return FrameJet2(self.x, self.y, self.t, np.conj(self.v),
                         np.conj(self.g), np.conj(self.h))


class FrameJet1:
    """A field with its first frame derivatives (Z, Zb, T applied once).

    Supports the derivation algebra: sums, products, quotients and
    conjugation, with Z(conj u) = conj(Zb u) built in.  This is enough
    to assemble divergence-form operators without second AD passes.
    """

    __slots__ = ("v", "Z", "Zb", "T")

    def __init__(self, v, Z, Zb, T):
        self.v = np.asarray(v, dtype=complex)
        self.Z = np.asarray(Z, dtype=complex)
        self.Zb = np.asarray(Zb, dtype=complex)
        self.T = np.asarray(T, dtype=complex)

    @classmethod
    def const(cls, value, shape=()) -> "FrameJet1":
        v = np.broadcast_to(np.asarray(value, dtype=complex), shape)
        zz = np.zeros(shape, complex)
        return cls(v, zz, zz, zz)

    @staticmethod
    def _lift(other, shape):
        if isinstance(other, FrameJet1):
            return other
        return FrameJet1.const(other, shape)

    def __add__(self, other):
        o = FrameJet1._lift(other, self.v.shape)
        return FrameJet1(self.v + o.v, self.Z + o.Z, self.Zb + o.Zb, self.T + o.T)

    __radd__ = __add__

    def __neg__(self):
        return FrameJet1(-self.v, -self.Z, -self.Zb, -self.T)

    def __sub__(self, other):
        return self + (-FrameJet1._lift(other, self.v.shape))

    def __rsub__(self, other):
        return FrameJet1._lift(other, self.v.shape) + (-self)

    def __mul__(self, other):
        o = FrameJet1._lift(other, self.v.shape)
        return FrameJet1(
            self.v * o.v,
            self.Z * o.v + self.v * o.Z,
            self.Zb * o.v + self.v * o.Zb,
            self.T * o.v + self.v * o.T,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "FrameJet1":
        w = 1.0 / self.v
        w2 = w * w
        return FrameJet1(w, -self.Z * w2, -self.Zb * w2, -self.T * w2)

    def __truediv__(self, other):
        return self * FrameJet1._lift(other, self.v.shape).reciprocal()

    def __rtruediv__(self, other):
        return FrameJet1._lift(other, self.v.shape) * self.reciprocal()

    def conj(self) -> "FrameJet1":
        return FrameJet1(np.conj(self.v), np.conj(self.Zb), np.conj(self.Z),
                         np.conj(self.T))

    def real(self) -> "FrameJet1":
        c = self.conj()
        return FrameJet1(0.5 * (self.v + c.v), 0.5 * (self.Z + c.Z),
                         0.5 * (self.Zb + c.Zb), 0.5 * (self.T + c.T))


class ScalarField:
    """A field defined by an AD builder in coordinate jets.

    builder(xj, yj, tj) receives the three coordinate Jets for a point
    batch and must return the field's Jet.  The same builder serves all
    derivative orders: values() seeds order 0 (plain evaluation), jet1()
    order 1, jet2() order 2.
    """

    def __init__(self, builder: Callable[[Jet, Jet, Jet], Jet], name: str = "",
                 is_real_valued: bool = False):
        self.builder = builder
        self.name = name
        self.is_real_valued = is_real_valued

    def jet2(self, points) -> FrameJet2:
        points = np.asarray(points, dtype=float)
        xj, yj, tj = coordinate_jets(points, order=2)
        return FrameJet2.from_jet(points, self.builder(xj, yj, tj))

    def jet1(self, points) -> FrameJet1:
        points = np.asarray(points, dtype=float)
        xj, yj, tj = coordinate_jets(points, order=1)
        jet = self.builder(xj, yj, tj)
        return frame_jet1_from_coords(points, jet.v, jet.g)

    def values(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        xj, yj, tj = coordinate_jets(points, order=0)
        return self.builder(xj, yj, tj).v

    def __call__(self, points) -> np.ndarray:
        return self.values(points)


def frame_jet1_from_coords(points, v, g) -> FrameJet1:
    """Assemble first frame derivatives from a coordinate 1-jet."""
    points = np.asarray(points, dtype=float)
    z = points[..., 0] + 1j * points[..., 1]
    uz = 0.5 * (g[..., 0] - 1j * g[..., 1])
    uzb = 0.5 * (g[..., 0] + 1j * g[..., 1])
    ut = g[..., 2]
    return FrameJet1(v, uz + 1j * np.conj(z) * ut, uzb - 1j * z * ut, ut)


def fd_coord_jet(func, points, step: float = 1e-3, richardson: bool = True):
    """Coordinate 2-jet of func by central differences.

    func maps a (..., 3) point array to complex values.  One Richardson
    extrapolation level (h and h/2) upgrades the O(h^2) stencils to
    O(h^4).  This is the independent derivative path used to cross-check
    the AD jets; accuracy ~1e-10 for smooth O(1) fields at step ~1e-2.
    """
    points = np.asarray(points, dtype=float)

    def one_level(h):
        base = np.asarray(func(points), dtype=complex)
        shape = base.shape
        g = np.zeros(shape + (3,), complex)
        hh = np.zeros(shape + (3, 3), complex)
        plus = []
        minus = []
        for i in range(3):
            ei = np.zeros(3)
            ei[i] = h
            fp = np.asarray(func(points + ei), dtype=complex)
            fm = np.asarray(func(points - ei), dtype=complex)
            plus.append(fp)
            minus.append(fm)
            g[..., i] = (fp - fm) / (2 * h)
            hh[..., i, i] = (fp - 2 * base + fm) / (h * h)
        for i in range(3):
            for j in range(i + 1, 3):
                ei = np.zeros(3)
                ej = np.zeros(3)
                ei[i] = h
                ej[j] = h
                fpp = np.asarray(func(points + ei + ej), dtype=complex)
                fpm = np.asarray(func(points + ei - ej), dtype=complex)
                fmp = np.asarray(func(points - ei + ej), dtype=complex)
                fmm = np.asarray(func(points - ei - ej), dtype=complex)
                mixed = (fpp - fpm - fmp + fmm) / (4 * h * h)
                hh[..., i, j] = mixed
                hh[..., j, i] = mixed
        return base, g, hh

    v1, g1, h1 = one_level(step)
    if not richardson:
        return v1, g1, h1
    v2, g2, h2 = one_level(step / 2)
    return v2, (4 * g2 - g1) / 3, (4 * h2 - h1) / 3


def fd_frame_jet2(func, points, step: float = 1e-3) -> FrameJet2:
    """FrameJet2 built from the finite-difference coordinate jet."""
    points = np.asarray(points, dtype=float)
    v, g, h = fd_coord_jet(func, points, step)
    return FrameJet2(points[..., 0], points[..., 1], points[..., 2], v, g, h)


def frame_jet(u: "ScalarField", p) -> FrameJet2:
    """Exact frame 2-jet of a field at a point or point batch."""
    pts = np.asarray(p, dtype=float)
    return u.jet2(pts)


def xi_apply(u: "ScalarField", p):
    """The scaling field applied to u: z u_z + conj(z) u_zbar + 2 t u_t."""
    pts = np.atleast_2d(np.asarray(p, dtype=float))
    out = u.jet2(pts).Xiu
    return complex(out[0]) if out.shape == (1,) else out


def fd_fallback_jet(u, p, h: float = 1e-3) -> FrameJet2:
    """Finite-difference frame jet of a field (cross-check path).

    u may be a ScalarField or any callable on (..., 3) point arrays.
    The step must be positive; h = 0 cannot produce a stencil.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    func = u.values if isinstance(u, ScalarField) else u
    return fd_frame_jet2(func, p, step=h)


def gamma2_norm_estimate(f, probes=None) -> float:
    """Sampled Gamma^2-type norm: sum of sups of |f| and its frame
    derivatives up to order two over a probe cloud.  An estimate from
    below (probes only), used for smallness bookkeeping, not proofs.

    Accepts either a ScalarField plus a nonempty (N, 3) probe array,
    or a prebuilt FrameJet2.
    """
    if isinstance(f, FrameJet2):
        fj = f
    else:
        if probes is None:
            raise ValueError("probes required when passing a field")
        probes = np.asarray(probes, dtype=float)
        if probes.size == 0:
            raise ValueError("empty probe set gives no norm information")
        fj = f.jet2(probes)
    terms = [fj.u, fj.Zu, fj.Zbu, fj.ZZu, fj.ZbZbu, fj.ZZbu, fj.ZbZu]
    return float(sum(np.max(np.abs(t)) if t.size else 0.0 for t in terms))
