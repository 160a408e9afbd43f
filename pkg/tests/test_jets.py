"""Second-order jet transport against finite differences."""

import numpy as np

from cryamabe.bubbles import standard_bubble
from cryamabe.heis import dilate
from cryamabe.jets import (ScalarField, fd_coord_jet, fd_frame_jet2,
                           frame_jet, gamma2_norm_estimate, xi_apply)


def _complex_field():
    # smooth complex field with all mixed jets active
    def builder(xj, yj, tj):
        zz = xj + 1j * yj
        g = tj * tj + (1.0 + xj * xj + yj * yj) ** 2
        return (1.0 + 0.7 * zz + 0.3j * tj + 0.2 * zz * zz) * g.real_pow(-0.5)

    return ScalarField(builder, name="mixed")


def test_exact_jets_match_fd(probes):
    u = _complex_field()
    J = u.jet2(probes)
    F = fd_frame_jet2(u.values, probes)
    assert np.max(np.abs(F.g - J.g)) < 1e-7
    assert np.max(np.abs(F.h - J.h)) < 1e-4


def test_bubble_jets_match_fd(probes):
    U = standard_bubble()
    J = U.jet2(probes)
    F = fd_frame_jet2(U.values, probes)
    assert np.max(np.abs(F.g - J.g)) < 1e-9
    assert np.max(np.abs(F.h - J.h)) < 1e-6


def test_jet1_consistent_with_jet2(probes):
    u = _complex_field()
    J2 = u.jet2(probes)
    J1 = u.jet1(probes)
    np.testing.assert_allclose(J1.v, J2.u, atol=1e-14)
    np.testing.assert_allclose(J1.Z, J2.Zu, atol=1e-13)
    np.testing.assert_allclose(J1.Zb, J2.Zbu, atol=1e-13)
    np.testing.assert_allclose(J1.T, J2.Tu, atol=1e-13)


def test_frame_bracket_from_jets(probes):
    # [X, Y] = -4 d/dt holds exactly for transported second jets:
    # the frame hessian is assembled from a symmetric coordinate
    # hessian, so the commutator identity has no truncation error.
    U = standard_bubble()
    J = U.jet2(probes)
    comm = (J.ZZbu - J.ZbZu)  # [Z, Zb] = -2i T on our normalization
    np.testing.assert_allclose(comm.imag, -2.0 * J.Tu.real, atol=1e-12)
    np.testing.assert_allclose(comm.real, 2.0 * J.Tu.imag, atol=1e-12)


def test_fd_coord_jet_polynomial_exact(rng):
    pts = rng.uniform(-1.5, 1.5, (30, 3))

    def f(p):
        return (p[:, 0] ** 2 * p[:, 1] - 2.0 * p[:, 2] * p[:, 0]
                + 0.5 * p[:, 1] ** 3)

    v, g, h = fd_coord_jet(f, pts, step=1e-2)
    np.testing.assert_allclose(g[:, 0], 2 * pts[:, 0] * pts[:, 1]
                               - 2 * pts[:, 2], atol=1e-9)
    np.testing.assert_allclose(h[:, 0, 1], 2 * pts[:, 0], atol=1e-7)
    np.testing.assert_allclose(h[:, 2, 2], 0.0, atol=1e-7)


def test_xi_is_dilation_generator(probes):
    U = standard_bubble()
    xi = xi_apply(U, probes)
    eps = 1e-6
    up = U.values(dilate(1.0 + eps, probes))
    dn = U.values(dilate(1.0 - eps, probes))
    np.testing.assert_allclose(xi, (up - dn) / (2 * eps),
                               rtol=0, atol=1e-8)


def test_frame_jet_single_point():
    U = standard_bubble()
    J = frame_jet(U, (0.3, -0.2, 0.8))
    K = U.jet2(np.array([[0.3, -0.2, 0.8]]))
    assert abs(complex(J.u) - complex(K.u[0])) < 1e-14


def test_gamma2_norm_estimate(probes):
    zero = ScalarField(lambda xj, yj, tj: 0.0 * xj, name="zero")
    assert gamma2_norm_estimate(zero, probes) == 0.0
    U = standard_bubble()
    est = gamma2_norm_estimate(U, probes)
    # dominates the sup of |U| over the same probes
    assert est >= np.max(np.abs(U.values(probes)))
