"""Forward-mode jets in the ambient coordinates (x, y, t).

A Jet carries, for a batch of evaluation points, the complex value of a
field and, optionally, its coordinate gradient and (symmetric) Hessian.
Arithmetic propagates exactly those levels that are seeded: order-0
seeds give plain vectorised evaluation, order-1 adds gradients, order-2
adds Hessians.  Any field built from coordinate jets by +, *, /, integer
powers, real powers, sqrt and conj therefore has machine-accurate
derivatives up to the seeded order.  The frame calculus on top of this
lives in jets.py.

Values are stored as complex128 throughout, including for real fields;
this keeps dtype promotion out of the arithmetic rules.  Shapes: value
(...,), gradient (..., 3), Hessian (..., 3, 3), broadcasting freely.
A missing level is treated as identically zero, which is correct for
constants (the only things that legitimately enter an expression at a
lower order than the coordinate seeds); seed all coordinates at the
same order.
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import DomainError

__all__ = ["Jet", "coordinate_jets", "jet_where"]


def _e(v):
    # value broadcast against a gradient axis
    return np.asarray(v)[..., None]


def _ee(v):
    return np.asarray(v)[..., None, None]


def _outer(p, q):
    return p[..., :, None] * q[..., None, :]


class Jet:
    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=None, h=None):
        self.v = np.asarray(v, dtype=complex)
        self.g = None if g is None else np.asarray(g, dtype=complex)
        self.h = None if h is None else np.asarray(h, dtype=complex)

    # -- constructors -------------------------------------------------

    @classmethod
    def const(cls, value, shape=()) -> "Jet":
        return cls(np.broadcast_to(np.asarray(value, dtype=complex), shape))

    @classmethod
    def variable(cls, values, axis: int, order: int = 2) -> "Jet":
        """Jet of the coordinate function number `axis` (0=x, 1=y, 2=t)."""
        values = np.asarray(values, dtype=complex)
        if order == 0:
            return cls(values)
        g = np.zeros(values.shape + (3,), complex)
        g[..., axis] = 1.0
        if order == 1:
            return cls(values, g)
        return cls(values, g, np.zeros(values.shape + (3, 3), complex))

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _lift(other) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (numbers.Number, np.ndarray)):
            return Jet.const(other, np.shape(other))
        return NotImplemented  # type: ignore[return-value]

    @staticmethod
    def _zsum(a, b):
        # sum treating None as zero; None if both are None
        if a is None:
            return b
        if b is None:
            return a
        return a + b

    def __add__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return Jet(self.v + o.v, Jet._zsum(self.g, o.g),
                   Jet._zsum(self.h, o.h))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, None if self.g is None else -self.g,
                   None if self.h is None else -self.h)

    def __sub__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        v = self.v * o.v
        g = Jet._zsum(
            None if self.g is None else self.g * _e(o.v),
            None if o.g is None else o.g * _e(self.v),
        )
        h = Jet._zsum(
            None if self.h is None else self.h * _ee(o.v),
            None if o.h is None else o.h * _ee(self.v),
        )
        if self.g is not None and o.g is not None:
            cross = _outer(self.g, o.g)
            cross = cross + np.swapaxes(cross, -1, -2)
            h = Jet._zsum(h, cross)
        return Jet(v, g, h)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        w = 1.0 / self.v
        w2 = w * w
        g = None if self.g is None else -self.g * _e(w2)
        h = None
        if self.h is not None:
            h = -self.h * _ee(w2)
        if self.g is not None:
            bump = 2.0 * _outer(self.g, self.g) * _ee(w2 * w)
            h = Jet._zsum(h, bump) if self.h is not None else bump
        return Jet(w, g, h)

    def __truediv__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = Jet._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n):
        if not isinstance(n, numbers.Integral):
            return NotImplemented
        n = int(n)
        if n < 0:
            return (self ** (-n)).reciprocal()
        out = Jet.const(1.0, np.shape(self.v))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def real_pow(self, a: float, *, imag_tol: float = 1e-10) -> "Jet":
        """v^a for fields that are real and strictly positive.

        Raises DomainError if the stored value has drifted off the real
        axis or touches zero; fractional powers of complex values would
        silently pick a branch, which we never want.
        """
        vv = self.v
        scale = max(1.0, float(np.max(np.abs(vv.real))) if vv.size else 1.0)
        if vv.size and float(np.max(np.abs(vv.imag))) > imag_tol * scale:
            raise DomainError("real_pow applied to a field with imaginary part")
        r = vv.real
        if vv.size and float(np.min(r)) <= 0.0:
            raise DomainError("real_pow applied to a non-positive field")
        w = r ** a
        g = h = None
        if self.g is not None:
            w1 = a * r ** (a - 1.0)
            g = self.g * _e(w1)
            if self.h is not None:
                w2 = a * (a - 1.0) * r ** (a - 2.0)
                h = self.h * _ee(w1) + _outer(self.g, self.g) * _ee(w2)
        return Jet(w.astype(complex), g, h)

    def sqrt(self) -> "Jet":
        return self.real_pow(0.5)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.v),
                   None if self.g is None else np.conj(self.g),
                   None if self.h is None else np.conj(self.h))

    def real(self) -> "Jet":
        return Jet(self.v.real.astype(complex),
                   None if self.g is None else self.g.real.astype(complex),
                   None if self.h is None else self.h.real.astype(complex))

    def imag(self) -> "Jet":
        return Jet(self.v.imag.astype(complex),
                   None if self.g is None else self.g.imag.astype(complex),
                   None if self.h is None else self.h.imag.astype(complex))

    def abs2(self) -> "Jet":
        return (self * self.conj()).real()

    # -- structure helpers --------------------------------------------

    @property
    def shape(self):
        return self.v.shape

    @property
    def order(self) -> int:
        if self.h is not None:
            return 2
        return 1 if self.g is not None else 0

    def __getitem__(self, idx) -> "Jet":
        return Jet(self.v[idx],
                   None if self.g is None else self.g[idx],
                   None if self.h is None else self.h[idx])

    def __repr__(self):
        return f"Jet(shape={self.v.shape}, order={self.order})"


def coordinate_jets(points, order: int = 2):
    """Seed jets (x, y, t) for a (..., 3) array of evaluation points."""
    points = np.asarray(points, dtype=float)
    return tuple(Jet.variable(points[..., i], i, order) for i in range(3))


def jet_where(mask, a: Jet, b: Jet) -> Jet:
    """Pointwise select between two jets; mask broadcasts over the batch.

    Both branches must carry the same derivative order.
    """
    mask = np.asarray(mask, dtype=bool)
    if a.order != b.order:
        raise ValueError("jet_where branches have different orders")
    g = h = None
    if a.g is not None:
        g = np.where(mask[..., None], a.g, b.g)
    if a.h is not None:
        h = np.where(mask[..., None, None], a.h, b.h)
    return Jet(np.where(mask, a.v, b.v), g, h)
