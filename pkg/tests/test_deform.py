"""CR deformation fields: Rossi phase, gluing, rescaling."""

import numpy as np
import pytest

from cryamabe.deform import (CUTOFF_PROFILES, GluingSpec, Deformation,
                             glued_deformation, rescale_deformation,
                             rossi_deformation, rossi_phi,
                             validate_deformation, zero_deformation)
from cryamabe.errors import GluingOverlapError, NonCRDeformationError
from cryamabe.heis import HPoint


def _ball(s=0.25, r=0.8, center=(0.2, -0.1, 0.3), A=2.0):
    return glued_deformation(GluingSpec(
        centers=(HPoint(*center),), radii=(r,), amplitudes=(s,),
        annulus_factor=A))


def test_zero_deformation(probes):
    d = zero_deformation()
    assert d.is_zero
    j = d.jet2(probes)
    assert np.max(np.abs(j.u)) == 0.0
    assert np.max(np.abs(j.g)) == 0.0


def test_rossi_phase_unimodular(probes):
    assert np.max(np.abs(np.abs(rossi_phi(probes)) - 1.0)) < 1e-13


def test_rossi_field_is_scaled_phase(probes):
    s = 0.07
    d = rossi_deformation(s)
    f = d.jet2(probes).u
    np.testing.assert_allclose(f, s * rossi_phi(probes),
                               rtol=1e-13, atol=1e-15)
    assert abs(d.sup_bound - s) < 1e-15
    assert np.isinf(d.support_radius)


def test_rossi_validation(probes):
    rep = validate_deformation(rossi_deformation(0.07), probes)
    assert rep.passes
    assert abs(rep.sup_f - 0.07) < 1e-12
    assert rep.support_ok and rep.sup_bound_respected


def test_glued_matches_rossi_inside(rng):
    s, r = 0.25, 0.8
    c = np.array([0.2, -0.1, 0.3])
    d = _ball(s, r, tuple(c))
    # points well inside the inner ball, where the cutoff is 1
    local = rng.uniform(-0.2, 0.2, (50, 3)) * np.array([r, r, r * r]) + c
    dist = (((local[:, 0] - c[0]) ** 2 + (local[:, 1] - c[1]) ** 2) ** 2
            + (local[:, 2] - c[2]) ** 2) ** 0.25
    local = local[dist < 0.9 * r]
    full = rossi_deformation(s)
    np.testing.assert_allclose(d.jet2(local).u, full.jet2(local).u,
                               rtol=0, atol=1e-14)


def test_glued_vanishes_outside(probes):
    d = _ball()
    ball = d.support_balls[0]
    gauge = np.array([((ball.center.inv() * HPoint(*p)).norm())
                      for p in probes])
    far = probes[gauge > ball.radius * 1.01]
    assert far.shape[0] > 0
    j = d.jet2(far)
    assert np.max(np.abs(j.u)) == 0.0
    assert np.max(np.abs(j.g)) == 0.0
    assert np.max(np.abs(j.h)) == 0.0


def test_glued_validation_report(probes):
    rep = validate_deformation(_ball(), probes, alpha=20.0)
    assert rep.passes
    assert rep.alpha == 20.0
    assert rep.sup_f <= 0.25 + 1e-12
    # and a smallness threshold under the measured estimate must fail
    assert not validate_deformation(_ball(), probes, alpha=5.0).passes


def test_quintic_profile_seam():
    # the profile is polynomial, so plain floats go through the same
    # arithmetic as jets
    chi = CUTOFF_PROFILES["quintic"]
    xs = np.linspace(0.0, 1.0, 201)
    vals = np.array([float(chi(x)) for x in xs])
    h = xs[1] - xs[0]
    assert abs(vals[0] - 1.0) < 1e-15
    assert abs(vals[-1]) < 1e-15
    assert np.all(vals >= -1e-15) and np.all(vals <= 1.0 + 1e-15)
    # first derivative vanishes at both ends (one sided differences
    # see only the O(h^2) cubic onset)
    assert abs((vals[1] - vals[0]) / h) < 1e-3
    assert abs((vals[-1] - vals[-2]) / h) < 1e-3
    # monotone decreasing on the seam
    assert np.all(np.diff(vals) <= 0)


def test_seam_continuity_of_jets():
    # second jets stay bounded and continuous across the gluing seam
    d = _ball(s=0.3, r=0.5, center=(0.0, 0.0, 0.0), A=2.0)
    eps = 1e-6
    for rho in (0.5, 1.0):  # inner seam and outer seam
        below = d.jet2(np.array([[rho - eps, 0.0, 0.0]]))
        above = d.jet2(np.array([[rho + eps, 0.0, 0.0]]))
        assert np.max(np.abs(below.u - above.u)) < 1e-4
        assert np.max(np.abs(below.g - above.g)) < 1e-3
        assert np.max(np.abs(below.h - above.h)) < 1e-1


def test_rescale_equivariance(probes):
    # f pulled through p = x * delta_{1/lam} p' equals pointwise
    # composition; exact, no quadrature involved
    d = _ball()
    anchor, lam = HPoint(0.5, 0.3, -0.4), 2.4
    r = rescale_deformation(d, anchor, lam)
    mu = 1.0 / lam
    mapped = np.empty_like(probes)
    mapped[:, 0] = anchor.x + mu * probes[:, 0]
    mapped[:, 1] = anchor.y + mu * probes[:, 1]
    mapped[:, 2] = (anchor.t + mu * mu * probes[:, 2]
                    + 2.0 * mu * (anchor.y * probes[:, 0]
                                  - anchor.x * probes[:, 1]))
    np.testing.assert_allclose(r.jet2(probes).u, d.jet2(mapped).u,
                               rtol=0, atol=1e-14)
    assert r.sup_bound == d.sup_bound


def test_rescale_support_balls():
    d = _ball(r=0.5, center=(0.0, 0.0, 0.0))
    r = rescale_deformation(d, HPoint(0.0, 0.0, 0.0), 3.0)
    assert abs(r.support_balls[0].radius - 3.0 * d.support_balls[0].radius) < 1e-14


def test_identity_rescale_is_same_object():
    d = _ball()
    assert rescale_deformation(d, HPoint(0.0, 0.0, 0.0), 1.0) is d


def test_overlap_rejected():
    with pytest.raises(GluingOverlapError):
        GluingSpec(centers=(HPoint(0, 0, 0), HPoint(0.5, 0, 0)),
                   radii=(0.5, 0.5), amplitudes=(0.1, 0.1))


def test_amplitude_bound_enforced():
    with pytest.raises(NonCRDeformationError):
        GluingSpec(centers=(HPoint(0, 0, 0),), radii=(0.5,),
                   amplitudes=(1.0,))


def test_annulus_factor_validated():
    with pytest.raises(ValueError):
        GluingSpec(centers=(HPoint(0, 0, 0),), radii=(0.5,),
                   amplitudes=(0.1,), annulus_factor=1.0)
