"""Bubble family: calibration, the cubic identity, tangent generators."""

import math

import numpy as np
import pytest

from cryamabe.bubbles import (BASIS_NAMES, TANGENT_NAMES, BubbleParams,
                              bubble_constant, bubble_field, calibrate_c1,
                              standard_bubble, tangent_basis, tangent_fields)
from cryamabe.heis import HPoint, dilate, group_inv, group_mul
from cryamabe.jets import xi_apply


def test_constant_is_sqrt2():
    # forced by Delta0 w = -w^3 for w = g^(-1/2); the calibration
    # ratio must land on it exactly up to probe roundoff
    assert abs(bubble_constant() - math.sqrt(2.0)) < 1e-12


def test_calibration_report():
    rep = calibrate_c1()
    assert rep.ratio_spread < 1e-10
    assert rep.residual_max < 1e-8
    assert abs(rep.c1 - math.sqrt(2.0)) < 1e-12
    assert rep.n_probes >= 10


def test_cubic_identity(probes):
    # L0 U = 2 U^3 with exact jets; quantified relative to U^3
    U = standard_bubble()
    J = U.jet2(probes)
    res = -4.0 * J.Delta0u.real - 2.0 * J.u.real ** 3
    assert np.max(np.abs(res) / np.abs(J.u.real) ** 3) < 1e-12


def test_value_at_origin():
    U = standard_bubble()
    v = U.values(np.zeros((1, 3)))[0]
    assert abs(v - math.sqrt(2.0)) < 1e-14


def test_family_covariance(rng):
    # u_{x,lam}(p) = lam * u(delta_lam (x^{-1} p)) identically
    pts = rng.uniform(-2, 2, (50, 3))
    x = np.array([0.4, -0.2, 0.7])
    lam = 2.3
    B = bubble_field(BubbleParams(center=HPoint(*x), scale=lam))
    comp = lam * standard_bubble().values(
        dilate(lam, group_mul(group_inv(x), pts)))
    np.testing.assert_allclose(B.values(pts), comp, rtol=1e-13, atol=1e-14)


def test_scaled_identity(rng):
    # the identity is dilation invariant, so it must survive transport
    pts = rng.uniform(-1.5, 1.5, (80, 3))
    B = bubble_field(BubbleParams(center=HPoint(0.3, 0.1, -0.5), scale=1.7))
    J = B.jet2(pts)
    res = -4.0 * J.Delta0u.real - 2.0 * J.u.real ** 3
    assert np.max(np.abs(res) / np.abs(J.u.real) ** 3) < 1e-11


def test_tangent_keys():
    assert tuple(tangent_fields().keys()) == TANGENT_NAMES
    assert tuple(tangent_basis().keys()) == BASIS_NAMES


def test_tangent_fields_are_frame_derivatives(probes):
    # at (e, 1) the four generators are Z U, Zb U, T U and Xi U
    U = standard_bubble()
    J = U.jet2(probes)
    tf = tangent_fields()
    np.testing.assert_allclose(tf["Z"].values(probes), J.Zu, atol=1e-12)
    np.testing.assert_allclose(tf["Zb"].values(probes), J.Zbu, atol=1e-12)
    np.testing.assert_allclose(tf["T"].values(probes), J.Tu.real, atol=1e-12)
    np.testing.assert_allclose(tf["Xi"].values(probes),
                               xi_apply(U, probes), atol=1e-8)


def test_basis_is_real_split(probes):
    tf = tangent_fields()
    tb = tangent_basis()
    z = tf["Z"].values(probes)
    np.testing.assert_allclose(tb["z_re"].values(probes), z.real, atol=1e-13)
    np.testing.assert_allclose(tb["z_im"].values(probes), z.imag, atol=1e-13)
    np.testing.assert_allclose(tb["t"].values(probes),
                               tf["T"].values(probes), atol=1e-13)
    np.testing.assert_allclose(tb["dilation"].values(probes),
                               tf["Xi"].values(probes), atol=1e-13)


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_tangent_transport_weights(lam, rng):
    # center/scale moves carry lam^2 (Z), lam^3 (T), lam^1 (Xi)
    # relative to the unit member evaluated in rescaled coordinates
    pts = rng.uniform(-1.0, 1.0, (40, 3))
    q = dilate(lam, pts)
    tf1 = tangent_fields()
    tfl = tangent_fields(BubbleParams(scale=lam))
    np.testing.assert_allclose(tfl["Z"].values(pts),
                               lam ** 2 * tf1["Z"].values(q), rtol=1e-12)
    np.testing.assert_allclose(tfl["T"].values(pts),
                               lam ** 3 * tf1["T"].values(q), rtol=1e-12)
    np.testing.assert_allclose(tfl["Xi"].values(pts),
                               lam * tf1["Xi"].values(q), rtol=1e-12)


def test_t_generator_odd_at_origin():
    tb = tangent_basis()
    assert abs(tb["t"].values(np.zeros((1, 3)))[0]) < 1e-15


def test_tangent_decay_on_ray():
    # Z and T generators decay strictly faster than U along a ray;
    # the dilation generator does not: Xi U -> -2 U at infinity
    U = standard_bubble()
    tf = tangent_fields()
    ray = np.array([[r, 0.0, 0.0] for r in (5.0, 10.0, 20.0)])
    u = U.values(ray).real
    ratio_z = np.abs(tf["Z"].values(ray)) / u
    assert np.all(np.diff(ratio_z) < 0) and ratio_z[-1] < 0.3 * ratio_z[0]
    ray_t = np.array([[1.0, 0.0, t] for t in (5.0, 10.0, 20.0)])
    u_t = U.values(ray_t).real
    ratio_t = np.abs(tf["T"].values(ray_t)) / u_t
    assert np.all(np.diff(ratio_t) < 0) and ratio_t[-1] < 0.3 * ratio_t[0]
    ratio_xi = tf["Xi"].values(ray).real / u
    np.testing.assert_allclose(ratio_xi[-1], -2.0, atol=0.05)
