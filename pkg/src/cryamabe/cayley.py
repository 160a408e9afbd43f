"""Transfer between the group model and the sphere model.

The sphere S^3 = {|w1|^2 + |w2|^2 = 1} in C^2 carries the tautological
CR field W = conj(w2) d/dw1 - conj(w1) d/dw2.  The equivalence with the
group model (minus a pole) is

    F(w1, w2) = ( w1 / (1 + w2),  Re( i (1 - w2) / (1 + w2) ) ),

singular exactly at w2 = -1, with inverse

    F^{-1}(z, t) = ( 2 i z / D,  (-t + i (1 - |z|^2)) / D ),
    D = t + i (1 + |z|^2).

Pushing W forward through F should give a multiple of Z with no Zb or T
component; pushforward_W_check measures this with an ambient central
difference Jacobian (the chart formula extends off the sphere, so no
constrained differentiation is needed) and compares against the
predicted coefficient (i/2) D^3 / |D|^2.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DomainError, PoleError
from .heis import HPoint

__all__ = [
    "SpherePoint",
    "cayley",
    "cayley_inv",
    "pushforward_W_check",
    "PushforwardCheck",
]

_SPHERE_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class SpherePoint:
    """A point of the unit sphere in C^2, validated on construction."""

    w1: complex
    w2: complex

    def __post_init__(self):
        object.__setattr__(self, "w1", complex(self.w1))
        object.__setattr__(self, "w2", complex(self.w2))
        r = abs(self.w1) ** 2 + abs(self.w2) ** 2
        if abs(r - 1.0) > _SPHERE_TOL:
            raise DomainError(
                f"|w|^2 = {r!r} is not 1 within tolerance")

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2], dtype=complex)


def _chart(w1, w2):
    """The chart map on ambient C^2 (used off the sphere by the FD
    Jacobian); returns (x, y, t) floats."""
    denom = 1.0 + w2
    z = w1 / denom
    t = np.real(1j * (1.0 - w2) / denom)
    return np.real(z), np.imag(z), t


def cayley(w: SpherePoint) -> HPoint:
    """Chart map sphere -> group; w2 = -1 is the deleted pole."""
    if abs(1.0 + w.w2) < _SPHERE_TOL:
        raise PoleError("w2 = -1 is the pole of the chart")
    x, y, t = _chart(w.w1, w.w2)
    return HPoint(float(x), float(y), float(t))


def cayley_inv(p: HPoint) -> SpherePoint:
    """Inverse chart group -> sphere; lands at unit modulus exactly."""
    z = complex(p.x, p.y)
    denom = p.t + 1j * (1.0 + abs(z) ** 2)
    w1 = 2j * z / denom
    w2 = (-p.t + 1j * (1.0 - abs(z) ** 2)) / denom
    return SpherePoint(w1, w2)


@dataclasses.dataclass(frozen=True)
class PushforwardCheck:
    """Decomposition dF(W) = z_coeff Z + zbar_coeff Zb + t_coeff T at p.

    For the genuine CR field the zbar and t coefficients vanish and
    z_coeff matches z_coeff_predicted = (i/2) D^3 / |D|^2.
    """

    point: HPoint
    z_coeff: complex
    zbar_coeff: complex
    t_coeff: complex
    z_coeff_predicted: complex

    @property
    def spurious(self) -> float:
        return max(abs(self.zbar_coeff), abs(self.t_coeff))

    @property
    def mismatch(self) -> float:
        return abs(self.z_coeff - self.z_coeff_predicted)


def _ambient_jacobian(w: SpherePoint, step: float) -> np.ndarray:
    """3x4 Jacobian of the chart in real ambient coordinates
    (w1x, w1y, w2x, w2y), central differences with one Richardson
    level."""
    base = np.array([w.w1.real, w.w1.imag, w.w2.real, w.w2.imag])

    def level(h):
        J = np.zeros((3, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            up = base + e
            dn = base - e
            fp = _chart(up[0] + 1j * up[1], up[2] + 1j * up[3])
            fm = _chart(dn[0] + 1j * dn[1], dn[2] + 1j * dn[3])
            J[:, j] = (np.asarray(fp) - np.asarray(fm)) / (2 * h)
        return J

    j1 = level(step)
    j2 = level(step / 2)
    return (4.0 * j2 - j1) / 3.0


def pushforward_W_check(p: HPoint, step: float = 1e-5) -> PushforwardCheck:
    """Measure dF(W) at F^{-1}(p) and decompose in the frame at p."""
    w = cayley_inv(p)
    if abs(1.0 + w.w2) < 1e-6:
        raise PoleError("point maps too close to the chart pole")
    J = _ambient_jacobian(w, step)
    # W = conj(w2) d/dw1 - conj(w1) d/dw2 with d/dw = (d/dwx - i d/dwy)/2
    a1 = np.conj(w.w2)
    a2 = -np.conj(w.w1)
    c = np.array([0.5 * a1, -0.5j * a1, 0.5 * a2, -0.5j * a2])
    V = J.astype(complex) @ c  # complex coefficients on (dx, dy, dt)
    z = complex(p.x, p.y)
    alpha = V[0] + 1j * V[1]
    beta = V[0] - 1j * V[1]
    gamma = V[2] - 1j * np.conj(z) * alpha + 1j * z * beta
    D = p.t + 1j * (1.0 + abs(z) ** 2)
    predicted = 0.5j * D ** 3 / abs(D) ** 2
    return PushforwardCheck(point=p, z_coeff=complex(alpha),
                            zbar_coeff=complex(beta),
                            t_coeff=complex(gamma),
                            z_coeff_predicted=complex(predicted))
