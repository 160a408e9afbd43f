"""Connection, torsion, curvature and sublaplacian of a deformed structure.

For an admissible deformation f the holomorphic direction is rotated to
Zt = Z + f Zb, with dual coframe th^1 = (dz - conj(f) dzb) / E where
E = 1 - |f|^2.  Everything here is expressed through the exact frame
jets of f and u, so each quantity is a pointwise algebraic kernel:

  levi form      h = 2 E                   (positive iff |f| < 1)
  connection     om_theta = -conj(f) Tf / E
                 om_1     = Zb f
                 om_1b    = -N / E,   N = Z conj(f) + conj(f)^2 Z f
                                          + conj(f) Zb f + f Zb conj(f)
  torsion        A = -T conj(f) / E
  curvature      R = i h om_theta - Zbt om_1 + Zt om_1b
                     + om_1 om_1b - |om_1b|^2

with Zt/Zbt acting by Zt = Z + f Zb, Zbt = Zb + conj(f) Z.  The
curvature kernel expands Zt om_1b by the quotient rule through the
second frame derivatives of f; an independent finite-difference route
(differencing the connection component fields themselves) is provided
as an oracle, as are the coefficients of d th^1 computed from jets of
the coframe coefficients, which must reproduce (om_1b, -om_theta, A)
through the first structure equation.

The sublaplacian comes in three algebraically independent forms that
must agree to rounding: the defining trace form, a closed form in the
flat frame derivatives, and a divergence form Z a + Zb b assembled with
first-derivative algebra.  The quadratic truncation R_leading of the
curvature (the term bracket driving the smallness analysis) is exposed
alongside the exact value.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .deform import Deformation
from .errors import DegenerateLeviError
from .heis import HPoint
from .jets import (FrameJet1, FrameJet2, ScalarField, fd_coord_jet,
                   fd_frame_jet2, frame_jet1_from_coords)

__all__ = [
    "ConnectionData",
    "CurvatureValue",
    "connection_form",
    "dtheta1_coefficients",
    "structure_residuals",
    "webster_curvature",
    "webster_curvature_fd",
    "curvature_readings",
    "sublaplacian",
    "sublaplacian_fd",
    "conformal_sublaplacian",
    "connection_from_jets",
    "curvature_from_jets",
    "sublaplacian_from_jets",
    "l_difference_from_jets",
]

_LEVI_TOL = 1e-8
SUBLAPLACIAN_METHODS = ("defining", "closed", "divergence")


def _as_points(p):
    if isinstance(p, HPoint):
        return p.as_array()[None, :], True
    pts = np.asarray(p, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


def _unpack(arr, scalar):
    return complex(arr[0]) if scalar else arr


def _unpack_real(arr, scalar):
    return float(arr[0]) if scalar else arr


@dataclasses.dataclass(frozen=True)
class ConnectionData:
    """Connection coefficients in the coframe adapted to Zt = Z + f Zb."""

    levi: np.ndarray
    omega_theta: np.ndarray
    omega_1: np.ndarray
    omega_1bar: np.ndarray
    torsion: np.ndarray


@dataclasses.dataclass(frozen=True)
class CurvatureValue:
    """Webster curvature with its quadratic truncation.

    remainder = |R_exact - R_leading| pointwise; imag_leak records how
    far the exact expression strays from being real (rounding only, for
    correct inputs).  bound_inputs = (sup|f|, sup first, sup second
    frame derivatives) over the evaluated batch, the raw material of
    smallness estimates.
    """

    R_exact: np.ndarray
    R_leading: np.ndarray
    remainder: np.ndarray
    imag_leak: float
    bound_inputs: tuple[float, float, float]


def _levi_E(F: FrameJet2) -> np.ndarray:
    E = 1.0 - (F.u * np.conj(F.u)).real
    if E.size and float(np.min(E)) < _LEVI_TOL:
        raise DegenerateLeviError(
            f"Levi form degenerates: min(1 - |f|^2) = {float(np.min(E)):.3e}")
    return E


def _n_field(F: FrameJet2, E=None):
    f = F.u
    fb = np.conj(f)
    Zfb = np.conj(F.Zbu)
    Zbfb = np.conj(F.Zu)
    return Zfb + fb * fb * F.Zu + fb * F.Zbu + f * Zbfb


def connection_from_jets(F: FrameJet2) -> ConnectionData:
    f = F.u
    fb = np.conj(f)
    E = _levi_E(F)
    N = _n_field(F)
    return ConnectionData(
        levi=2.0 * E,
        omega_theta=-fb * F.Tu / E,
        omega_1=F.Zbu,
        omega_1bar=-N / E,
        torsion=-np.conj(F.Tu) / E,
    )


def connection_form(d: Deformation, p) -> ConnectionData:
    """Connection data of the deformed structure at a point or batch."""
    pts, scalar = _as_points(p)
    con = connection_from_jets(d.jet2(pts))
    if not scalar:
        return con
    return ConnectionData(
        levi=_unpack_real(con.levi, True),
        omega_theta=_unpack(con.omega_theta, True),
        omega_1=_unpack(con.omega_1, True),
        omega_1bar=_unpack(con.omega_1bar, True),
        torsion=_unpack(con.torsion, True),
    )


def _coframe_jet1(F: FrameJet2):
    """First-derivative jets of the coframe coefficients a = 1/E,
    b = -conj(f)/E, via derivation algebra on f's jet."""
    fj = F.jet1()
    fbj = fj.conj()
    E = 1.0 - fj * fbj
    a = E.reciprocal()
    b = -fbj * a
    return fj, a, b, E


def dtheta1_coefficients(d: Deformation, p):
    """Coefficients of d th^1 on (th^1 ^ th^1b, th ^ th^1, th ^ th^1b).

    Computed from jets of the coframe coefficients only; the first
    structure equation says these equal (om_1b, -om_theta, torsion).
    """
    pts, scalar = _as_points(p)
    F = d.jet2(pts)
    fj, a, b, E = _coframe_jet1(F)
    c_11b = (b.Z - a.Zb) * E.v
    c_t1 = a.T + fj.v * b.T
    c_t1b = np.conj(fj.v) * a.T + b.T
    return (_unpack(c_11b, scalar), _unpack(c_t1, scalar),
            _unpack(c_t1b, scalar))


def structure_residuals(d: Deformation, p) -> dict[str, float]:
    """Sup residuals of the first and second structure equations."""
    pts, _ = _as_points(p)
    F = d.jet2(pts)
    con = connection_from_jets(F)
    fj, a, b, E = _coframe_jet1(F)
    c_11b = (b.Z - a.Zb) * E.v
    c_t1 = a.T + fj.v * b.T
    c_t1b = np.conj(fj.v) * a.T + b.T
    first = {
        "first_11b": float(np.max(np.abs(c_11b - con.omega_1bar))),
        "first_t1": float(np.max(np.abs(c_t1 + con.omega_theta))),
        "first_t1b": float(np.max(np.abs(c_t1b - con.torsion))),
    }
    # trace part: om + conj(om) must be dlog(h) on the deformed frame
    Et = E.Z + fj.v * E.Zb
    second_theta = con.omega_theta + np.conj(con.omega_theta) - E.T / E.v
    second_1 = con.omega_1 + np.conj(con.omega_1bar) - Et / E.v
    first["second_theta"] = float(np.max(np.abs(second_theta)))
    first["second_1"] = float(np.max(np.abs(second_1)))
    first["max"] = max(first.values())
    return first


def _curvature_terms(F: FrameJet2):
    f = F.u
    fb = np.conj(f)
    E = _levi_E(F)
    Zf = F.Zu
    Zbf = F.Zbu
    Zfb = np.conj(Zbf)
    Zbfb = np.conj(Zf)
    ZZf = F.ZZu
    ZbZbf = F.ZbZbu
    ZZbf = F.ZZbu
    ZbZf = F.ZbZu
    Z2fb = np.conj(ZbZbf)
    Zb2fb = np.conj(ZZf)
    ZZbfb = np.conj(ZbZf)
    ZbZfb = np.conj(ZZbf)
    N = Zfb + fb * fb * Zf + fb * Zbf + f * Zbfb
    ZN = (Z2fb + 2.0 * fb * Zfb * Zf + fb * fb * ZZf
          + Zfb * Zbf + fb * ZZbf + Zf * Zbfb + f * ZZbfb)
    ZbN = (ZbZfb + 2.0 * fb * Zbfb * Zf + fb * fb * ZbZf
           + 2.0 * Zbfb * Zbf + fb * ZbZbf + f * Zb2fb)
    ZE = -(fb * Zf + f * Zfb)
    ZbE = -(fb * Zbf + f * Zbfb)
    Zom1b = -(ZN * E - N * ZE) / (E * E)
    Zbom1b = -(ZbN * E - N * ZbE) / (E * E)
    Zt_om1b = Zom1b + f * Zbom1b
    Zbt_om1 = ZbZbf + fb * ZZbf
    om1 = Zbf
    om1b = -N / E
    ih_om_theta = -2j * fb * F.Tu
    R = (ih_om_theta - Zbt_om1 + Zt_om1b + om1 * om1b
         - om1b * np.conj(om1b))
    bracket = (ZbZbf + Z2fb + fb * ZZbf + fb * ZbZf + f * ZZbfb
               + f * ZbZfb + Zf * Zbfb + 3.0 * Zbf * Zfb)
    return {
        "R": R,
        "leading": -bracket,
        "f": f, "Zf": Zf, "Zbf": Zbf, "Tf": F.Tu,
        "ZZf": ZZf, "ZbZbf": ZbZbf, "ZZbf": ZZbf, "ZbZf": ZbZf,
    }


def curvature_from_jets(F: FrameJet2) -> CurvatureValue:
    terms = _curvature_terms(F)
    R = terms["R"]
    lead = terms["leading"]
    imag_leak = float(np.max(np.abs(R.imag))) if R.size else 0.0
    sup_f = float(np.max(np.abs(terms["f"]))) if R.size else 0.0
    sup_d1 = float(max(np.max(np.abs(terms["Zf"])), np.max(np.abs(terms["Zbf"])),
                       np.max(np.abs(terms["Tf"])))) if R.size else 0.0
    sup_d2 = float(max(np.max(np.abs(terms["ZZf"])),
                       np.max(np.abs(terms["ZbZbf"])),
                       np.max(np.abs(terms["ZZbf"])),
                       np.max(np.abs(terms["ZbZf"])))) if R.size else 0.0
    return CurvatureValue(
        R_exact=R.real,
        R_leading=lead.real,
        remainder=np.abs(R.real - lead.real),
        imag_leak=imag_leak,
        bound_inputs=(sup_f, sup_d1, sup_d2),
    )


def webster_curvature(d: Deformation, p) -> CurvatureValue:
    """Exact Webster curvature and its quadratic truncation at p."""
    pts, scalar = _as_points(p)
    cv = curvature_from_jets(d.jet2(pts))
    if not scalar:
        return cv
    return CurvatureValue(
        R_exact=_unpack_real(cv.R_exact, True),
        R_leading=_unpack_real(cv.R_leading, True),
        remainder=_unpack_real(cv.remainder, True),
        imag_leak=cv.imag_leak,
        bound_inputs=cv.bound_inputs,
    )


def curvature_readings(d: Deformation, p) -> dict[str, np.ndarray]:
    """The truncation bracket under alternative readings of its first
    and mixed second-derivative terms (the published display garbles
    both; the corrected bracket is what R_leading uses).  Diagnostic
    output for reports, not used by the solvers."""
    pts, _ = _as_points(p)
    F = d.jet2(pts)
    terms = _curvature_terms(F)
    f = terms["f"]
    Zfb = np.conj(terms["Zbf"])
    Z2fb = np.conj(terms["ZbZbf"])
    ZZbfb = np.conj(terms["ZbZf"])
    Zb2fb = np.conj(terms["ZZf"])
    corrected = terms["leading"]
    first_order1 = corrected - (-(Z2fb)) + (-(Zfb))
    mixed_zb2 = corrected - (-(f * ZZbfb)) + (-(f * Zb2fb))
    return {
        "corrected": corrected.real,
        "first_term_order_one": first_order1.real,
        "mixed_term_zb_squared": mixed_zb2.real,
        "exact": terms["R"].real,
    }


def sublaplacian_from_jets(F: FrameJet2, Uj: FrameJet2,
                           method: str = "defining") -> np.ndarray:
    f = F.u
    fb = np.conj(f)
    E = _levi_E(F)
    if method == "defining":
        Zfb = np.conj(F.Zbu)
        Zbfb = np.conj(F.Zu)
        N = _n_field(F)
        om1b = -N / E
        ZtZbt = (Uj.ZZbu + Zfb * Uj.Zu + fb * Uj.ZZu
                 + f * (Uj.ZbZbu + Zbfb * Uj.Zu + fb * Uj.ZbZu))
        ZbtZt = (Uj.ZbZu + F.Zbu * Uj.Zbu + f * Uj.ZbZbu
                 + fb * (Uj.ZZu + F.Zu * Uj.Zbu + f * Uj.ZZbu))
        Ztu = Uj.Zu + f * Uj.Zbu
        Zbtu = Uj.Zbu + fb * Uj.Zu
        return (ZtZbt + ZbtZt - om1b * Ztu - np.conj(om1b) * Zbtu) / (2.0 * E)
    if method == "closed":
        N = _n_field(F)
        aff = (f * fb).real
        return (((1.0 + aff) * Uj.Delta0u + f * Uj.ZbZbu + fb * Uj.ZZu) / E
                + (N * Uj.Zu + np.conj(N) * Uj.Zbu) / (E * E))
    if method == "divergence":
        fj = F.jet1()
        fbj = fj.conj()
        uZ = Uj.jet1_Z()
        uZb = Uj.jet1_Zb()
        absf2 = fj * fbj
        Einv = (1.0 - absf2).reciprocal()
        one_plus = 1.0 + absf2
        a = (one_plus * uZb + 2.0 * fbj * uZ) * Einv * 0.5
        b = (one_plus * uZ + 2.0 * fj * uZb) * Einv * 0.5
        return a.Z + b.Zb
    raise ValueError(f"unknown sublaplacian method {method!r}")


def sublaplacian(d: Deformation, u: ScalarField, p,
                 method: str = "defining"):
    """Sublaplacian of u for the deformed structure at p.

    method picks one of three algebraically independent evaluations
    ("defining", "closed", "divergence"); they agree to rounding and
    the tests hold them together.
    """
    if method not in SUBLAPLACIAN_METHODS:
        raise ValueError(f"unknown sublaplacian method {method!r}")
    pts, scalar = _as_points(p)
    out = sublaplacian_from_jets(d.jet2(pts), u.jet2(pts), method)
    return _unpack(out, scalar)


def sublaplacian_fd(d: Deformation, u: ScalarField, p,
                    method: str = "defining", step: float = 1e-3):
    """Same kernels fed with finite-difference jets of f and u (the
    derivative-independent oracle path)."""
    pts, scalar = _as_points(p)
    F = fd_frame_jet2(d.field.values, pts, step=step)
    Uj = fd_frame_jet2(u.values, pts, step=step)
    out = sublaplacian_from_jets(F, Uj, method)
    return _unpack(out, scalar)


def l_difference_from_jets(F: FrameJet2, Uj: FrameJet2) -> np.ndarray:
    """(L_J - L_0) u pointwise: the deformation part of the conformal
    operator, with the flat part subtracted in closed form (no
    cancellation of large terms)."""
    f = F.u
    fb = np.conj(f)
    E = _levi_E(F)
    N = _n_field(F)
    aff = (f * fb).real
    ddiff = ((2.0 * aff * Uj.Delta0u + f * Uj.ZbZbu + fb * Uj.ZZu) / E
             + (N * Uj.Zu + np.conj(N) * Uj.Zbu) / (E * E))
    R = _curvature_terms(F)["R"]
    return -4.0 * ddiff + R.real * Uj.u


def conformal_sublaplacian(d: Deformation, u: ScalarField, p,
                           method: str = "closed"):
    """L_J u = -4 Delta_J u + R_J u at p (real for real u)."""
    pts, scalar = _as_points(p)
    F = d.jet2(pts)
    Uj = u.jet2(pts)
    delta = sublaplacian_from_jets(F, Uj, method)
    R = _curvature_terms(F)["R"].real
    out = -4.0 * delta + R * Uj.u
    if u.is_real_valued:
        out = out.real
        return _unpack_real(out, scalar)
    return _unpack(out, scalar)


def webster_curvature_fd(d: Deformation, p, step: float = 1e-3):
    """Curvature via finite differences of the connection component
    fields themselves; independent of the expanded quotient-rule kernel.
    Returns real values."""
    pts, _ = _as_points(p)
    F = d.jet2(pts)
    f = F.u
    fb = np.conj(f)
    E = _levi_E(F)

    def om1_values(q):
        return d.jet2(np.asarray(q, dtype=float)).Zbu

    def om1b_values(q):
        Fq = d.jet2(np.asarray(q, dtype=float))
        return -_n_field(Fq) / _levi_E(Fq)

    v1, g1, _ = fd_coord_jet(om1_values, pts, step=step)
    v1b, g1b, _ = fd_coord_jet(om1b_values, pts, step=step)
    j_om1 = frame_jet1_from_coords(pts, v1, g1)
    j_om1b = frame_jet1_from_coords(pts, v1b, g1b)
    Zbt_om1 = j_om1.Zb + fb * j_om1.Z
    Zt_om1b = j_om1b.Z + f * j_om1b.Zb
    R = (-2j * fb * F.Tu - Zbt_om1 + Zt_om1b + v1 * v1b
         - v1b * np.conj(v1b))
    return R.real
