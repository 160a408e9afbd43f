"""Group operations, dilations, gauge geometry."""

import numpy as np
import pytest

from cryamabe.heis import (HPoint, ORIGIN, KoranyiBall, balls_disjoint,
                           dilate, group_inv, group_mul, koranyi_dist,
                           koranyi_norm, left_translate)


def _rand_pts(rng, n):
    return rng.uniform(-3.0, 3.0, (n, 3))


def test_group_law_formula(rng):
    # (z,t)*(w,s) = (z+w, t+s+2 Im(z cong(w)))
    p, q = _rand_pts(rng, 50), _rand_pts(rng, 50)
    got = group_mul(p, q)
    z = p[:, 0] + 1j * p[:, 1]
    w = q[:, 0] + 1j * q[:, 1]
    zw = z + w
    t = p[:, 2] + q[:, 2] + 2.0 * np.imag(z * np.conj(w))
    np.testing.assert_allclose(got[:, 0], zw.real, atol=1e-14)
    np.testing.assert_allclose(got[:, 1], zw.imag, atol=1e-14)
    np.testing.assert_allclose(got[:, 2], t, atol=1e-13)


def test_associativity(rng):
    p, q, r = (_rand_pts(rng, 100) for _ in range(3))
    lhs = group_mul(group_mul(p, q), r)
    rhs = group_mul(p, group_mul(q, r))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_identity_and_inverse(rng):
    p = _rand_pts(rng, 100)
    e = np.zeros(3)
    np.testing.assert_allclose(group_mul(p, e), p, atol=0)
    np.testing.assert_allclose(group_mul(e, p), p, atol=0)
    np.testing.assert_allclose(group_mul(p, group_inv(p)),
                               np.zeros_like(p), atol=1e-13)


def test_noncommutative():
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    ab = group_mul(a, b)
    ba = group_mul(b, a)
    assert abs(ab[2] - ba[2]) > 1.0  # commutator lives in the t axis


def test_dilation_automorphism(rng):
    p, q = _rand_pts(rng, 50), _rand_pts(rng, 50)
    for lam in (0.3, 2.5):
        lhs = dilate(lam, group_mul(p, q))
        rhs = group_mul(dilate(lam, p), dilate(lam, q))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-13)


def test_dilation_composition(rng):
    p = _rand_pts(rng, 20)
    np.testing.assert_allclose(dilate(2.0, dilate(3.0, p)),
                               dilate(6.0, p), rtol=1e-14)


def test_gauge_homogeneity(rng):
    p = _rand_pts(rng, 100)
    for lam in (0.25, 1.7, 8.0):
        np.testing.assert_allclose(koranyi_norm(dilate(lam, p)),
                                   lam * koranyi_norm(p), rtol=1e-13)


def test_gauge_symmetric(rng):
    p = _rand_pts(rng, 100)
    np.testing.assert_allclose(koranyi_norm(group_inv(p)),
                               koranyi_norm(p), rtol=1e-13)


def test_dist_left_invariant(rng):
    p, q, x = (_rand_pts(rng, 50) for _ in range(3))
    d0 = koranyi_dist(p, q)
    d1 = koranyi_dist(left_translate(x, p), left_translate(x, q))
    np.testing.assert_allclose(d1, d0, rtol=1e-12, atol=1e-13)


def test_hpoint_matches_arrays():
    p = HPoint(0.7, -0.4, 1.3)
    q = HPoint(-1.1, 0.2, 0.5)
    arr = group_mul(np.array([0.7, -0.4, 1.3]), np.array([-1.1, 0.2, 0.5]))
    pq = p * q
    np.testing.assert_allclose([pq.x, pq.y, pq.t], arr, atol=1e-15)
    assert abs(p.norm() - float(koranyi_norm(np.array([0.7, -0.4, 1.3])))) < 1e-15
    inv = p * p.inv()
    assert abs(inv.x) + abs(inv.y) + abs(inv.t) < 1e-15


def test_origin_neutral():
    p = HPoint(0.3, 0.9, -2.0)
    q = ORIGIN * p
    assert (q.x, q.y, q.t) == (p.x, p.y, p.t)


@pytest.mark.parametrize("c2,r2,expect", [
    ((4.0, 0.0, 0.0), 1.0, True),    # far apart
    ((0.5, 0.0, 0.0), 1.0, False),   # overlapping
    ((0.0, 0.0, 9.0), 0.5, True),    # separated along t only
])
def test_balls_disjoint(c2, r2, expect):
    b1 = KoranyiBall(HPoint(0.0, 0.0, 0.0), 1.0)
    b2 = KoranyiBall(HPoint(*c2), r2)
    assert balls_disjoint(b1, b2) is expect
