"""Compactified quadrature: normalization, the two paper constants."""

import numpy as np
import pytest

from cryamabe.bubbles import BubbleParams, bubble_field, standard_bubble
from cryamabe.heis import HPoint
from cryamabe.quad import (calibrate_volume_normalization, integrate,
                           lp_norm, product_rule, tail_fraction,
                           volume_normalization, x_inner)

PI2_4 = 4.0 * np.pi ** 2


def test_volume_normalization_value():
    # Lebesgue integral of the quartic weight is pi^2/4, so the
    # normalization that makes the bubble mass land on 4 pi^2 is 4
    assert volume_normalization() == 4.0
    rep = calibrate_volume_normalization(n_gl=10)
    assert rep.kappa == 4.0
    assert rep.relative_mismatch < 1e-8
    assert rep.target == PI2_4
    # kappa times the Lebesgue quartic mass must hit the target
    assert abs(rep.kappa * rep.lebesgue_quartic - rep.target) < 1e-7


@pytest.mark.parametrize("n_gl,rtol", [(6, 5e-7), (8, 5e-8), (16, 1e-9)])
def test_bubble_quartic_mass(n_gl, rtol):
    U = standard_bubble()
    rule = product_rule(n_gl=n_gl)
    q = integrate(lambda p: U.values(p).real ** 4, rule)
    assert abs(q - PI2_4) / PI2_4 < rtol


def test_dirichlet_energy_constant():
    # integral of U L0 U is twice the quartic mass, and the X norm
    # squared of U is 2 pi^2 under the same pairing
    U = standard_bubble()
    rule = product_rule(n_gl=12)
    xx = x_inner(U, U, rule)
    assert abs(xx - 2.0 * np.pi ** 2) / (2.0 * np.pi ** 2) < 5e-6
    q = integrate(lambda p: U.values(p).real ** 4, rule)
    # 4 * <U,U>_X = int U L0 U = 2 int U^4
    assert abs(4.0 * xx - 2.0 * q) / (2.0 * q) < 5e-6


def test_mass_invariant_under_translation():
    x = HPoint(0.8, -0.5, 1.2)
    B = bubble_field(BubbleParams(center=x))
    rule = product_rule(center=(x.x, x.y, x.t), n_gl=8)
    q = integrate(lambda p: B.values(p).real ** 4, rule)
    assert abs(q - PI2_4) / PI2_4 < 1e-7


def test_mass_invariant_under_scaling():
    lam = 3.0
    B = bubble_field(BubbleParams(scale=lam))
    rule = product_rule(scale=1.0 / lam, n_gl=8)
    q = integrate(lambda p: B.values(p).real ** 4, rule)
    assert abs(q - PI2_4) / PI2_4 < 1e-7


def test_off_center_rule_still_converges():
    # panels merged from two scales must not double count
    U = standard_bubble()
    rule = product_rule(n_gl=8, extra_scales=(0.5,))
    q = integrate(lambda p: U.values(p).real ** 4, rule)
    assert abs(q - PI2_4) / PI2_4 < 1e-7


def test_lp_norm_consistency():
    U = standard_bubble()
    rule = product_rule(n_gl=8)
    l4 = lp_norm(U, 4.0, rule)
    q = integrate(lambda p: np.abs(U.values(p)) ** 4, rule)
    assert abs(l4 ** 4 - q) / q < 1e-12


def test_tail_fraction_small():
    U = standard_bubble()
    rule = product_rule(n_gl=8)
    tf = tail_fraction(lambda p: U.values(p).real ** 4, rule)
    assert 0.0 < tf < 0.05


def test_rule_positive_weights():
    rule = product_rule(n_gl=6)
    assert np.all(rule.weights > 0)
    assert rule.nodes.shape == (rule.size, 3)
    assert rule.tail_mask.shape == (rule.size,)
