"""Sphere chart: roundtrips, pole handling, CR field transport."""

import numpy as np
import pytest

from cryamabe.cayley import (
    SpherePoint,
    cayley,
    cayley_inv,
    pushforward_W_check,
)
from cryamabe.errors import DomainError, PoleError
from cryamabe.heis import HPoint


def test_sphere_point_validation():
    SpherePoint(0.6, 0.8j)
    with pytest.raises(DomainError):
        SpherePoint(0.5, 0.5)
    with pytest.raises(DomainError):
        SpherePoint(1.0 + 1e-9, 0.0)


def test_inverse_lands_on_sphere(probes):
    for x, y, t in probes[:50]:
        w = cayley_inv(HPoint(x, y, t))
        r = abs(w.w1) ** 2 + abs(w.w2) ** 2
        assert r == pytest.approx(1.0, abs=1e-14)


def test_roundtrip_group_side(probes):
    worst = 0.0
    for x, y, t in probes:
        p = HPoint(x, y, t)
        q = cayley(cayley_inv(p))
        worst = max(worst, abs(q.x - p.x), abs(q.y - p.y),
                    abs(q.t - p.t))
    assert worst < 1e-12


def test_roundtrip_sphere_side(rng):
    # unit vectors in C^2, avoiding the pole neighborhood
    for _ in range(50):
        v = rng.standard_normal(4)
        v /= np.linalg.norm(v)
        w = SpherePoint(complex(v[0], v[1]), complex(v[2], v[3]))
        if abs(1.0 + w.w2) < 1e-2:
            continue
        back = cayley_inv(cayley(w))
        assert abs(back.w1 - w.w1) < 1e-12
        assert abs(back.w2 - w.w2) < 1e-12


def test_origin_maps_to_special_points():
    # group identity corresponds to w = (0, 1); the pole w2 = -1 is
    # the deleted point at infinity
    w = cayley_inv(HPoint(0.0, 0.0, 0.0))
    assert abs(w.w1) < 1e-15
    assert abs(w.w2 - 1.0) < 1e-15
    p = cayley(SpherePoint(0.0, 1.0))
    assert (p.x, p.y, p.t) == (0.0, 0.0, 0.0)


def test_pole_raises():
    with pytest.raises(PoleError):
        cayley(SpherePoint(0.0, -1.0))


def test_pushforward_is_cr(probes):
    # dF(W) must be a multiple of Z: no conjugate or vertical leak,
    # and the multiplier matches the closed form
    spurious = 0.0
    mismatch = 0.0
    for x, y, t in probes[:100]:
        chk = pushforward_W_check(HPoint(x, y, t))
        spurious = max(spurious, chk.spurious)
        mismatch = max(mismatch, chk.mismatch)
    assert spurious < 1e-8
    assert mismatch < 1e-8


def test_pushforward_reports_point():
    p = HPoint(0.3, -0.2, 0.5)
    chk = pushforward_W_check(p)
    assert (chk.point.x, chk.point.y, chk.point.t) == (p.x, p.y, p.t)
    assert chk.z_coeff_predicted != 0
