"""Group structure of the first Heisenberg group.

Points are (x, y, t) in R^3 with z = x + iy.  The group law is

    (z, t) * (w, s) = (z + w, t + s + 2 Im(z conj(w))),

anisotropic dilations act by delta_lambda(z, t) = (lambda z, lambda^2 t),
and the homogeneous gauge is |(z, t)| = (|z|^4 + t^2)^(1/4).  This gauge
satisfies a true triangle inequality, so gauge balls behave like metric
balls for disjointness arguments.

Array functions accept points as (..., 3) float arrays and broadcast.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = [
    "HPoint",
    "KoranyiBall",
    "ORIGIN",
    "group_mul",
    "group_inv",
    "dilate",
    "left_translate",
    "koranyi_norm",
    "koranyi_dist",
    "balls_disjoint",
]


@dataclasses.dataclass(frozen=True)
class HPoint:
    """A single Heisenberg point, convenience wrapper around (x, y, t)."""

    x: float
    y: float
    t: float

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t], dtype=float)

    @classmethod
    def from_array(cls, a) -> "HPoint":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def __mul__(self, other: "HPoint") -> "HPoint":
        return HPoint.from_array(group_mul(self.as_array(), other.as_array()))

    def inv(self) -> "HPoint":
        return HPoint(-self.x, -self.y, -self.t)

    def norm(self) -> float:
        return float(koranyi_norm(self.as_array()))


ORIGIN = HPoint(0.0, 0.0, 0.0)


def _split(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def group_mul(p, q) -> np.ndarray:
    """Group product p * q for (..., 3) arrays (broadcasting)."""
    px, py, pt = _split(p)
    qx, qy, qt = _split(q)
    # Im(z conj(w)) = y*qx - x*qy  for z = x+iy, w = qx+iqy
    tw = pt + qt + 2.0 * (py * qx - px * qy)
    return np.stack(np.broadcast_arrays(px + qx, py + qy, tw), axis=-1)


def group_inv(p) -> np.ndarray:
    """Group inverse, simply -p in coordinates."""
    return -np.asarray(p, dtype=float)


def dilate(lam: float, p) -> np.ndarray:
    """Anisotropic dilation delta_lambda: (z, t) -> (lam z, lam^2 t)."""
    px, py, pt = _split(p)
    lam = float(lam)
    return np.stack(
        np.broadcast_arrays(lam * px, lam * py, lam * lam * pt), axis=-1
    )


def left_translate(x, p) -> np.ndarray:
    """Pull p into the frame centred at x, i.e. compute x^{-1} * p."""
    return group_mul(group_inv(x), p)


def koranyi_norm(p) -> np.ndarray:
    px, py, pt = _split(p)
    r2 = px * px + py * py
    return (r2 * r2 + pt * pt) ** 0.25


def koranyi_dist(p, q) -> np.ndarray:
    """Left-invariant gauge distance |p^{-1} q|."""
    return koranyi_norm(group_mul(group_inv(p), q))


@dataclasses.dataclass(frozen=True)
class KoranyiBall:
    """Gauge ball of radius r about center."""

    center: HPoint
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    def contains(self, p) -> np.ndarray:
        return koranyi_dist(self.center.as_array(), p) < self.radius

    def scaled(self, factor: float) -> "KoranyiBall":
        return KoranyiBall(self.center, self.radius * float(factor))


def balls_disjoint(b1: KoranyiBall, b2: KoranyiBall) -> bool:
    """Sufficient disjointness test from the gauge triangle inequality."""
    d = float(koranyi_dist(b1.center.as_array(), b2.center.as_array()))
    return d > b1.radius + b2.radius or math.isclose(
        d, b1.radius + b2.radius, rel_tol=0.0, abs_tol=0.0
    )
