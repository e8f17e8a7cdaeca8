import math

import numpy as np
import pytest

from fracwave.profiles import RadialProfile, SourceField, bump, constant, monomial


def test_bump_values_and_support():
    b = bump(radius=2.0, power=3, amplitude=2.0)
    assert b(0.0) == pytest.approx(2.0)
    assert b(1.0) == pytest.approx(2.0 * 0.75 ** 3)
    assert np.all(b(np.array([2.0, 3.0])) == 0.0)
    assert b(-1.0) == b(1.0)
    r = np.linspace(0.1, 1.9, 7)
    h = 1e-6
    assert np.allclose(b.derivative(r), (b(r + h) - b(r - h)) / (2 * h), atol=1e-7)


def test_constant_and_monomial():
    assert np.all(constant(3.0)(np.arange(4.0)) == 3.0)
    m = monomial(2, 0.5)
    assert m(2.0) == pytest.approx(2.0)
    assert m.derivative(np.array(2.0)) == pytest.approx(2.0)


def test_sampled_profile_reproduces_cubic():
    r = np.linspace(0, 2, 21)
    p = RadialProfile.sampled(r, 1 - r ** 2)
    x = np.linspace(0, 1.9, 13)
    assert np.allclose(p(x), 1 - x ** 2, atol=1e-12)
    assert np.allclose(p.derivative(x), -2 * x, atol=1e-10)


def test_profile_validation():
    with pytest.raises(ValueError):
        RadialProfile()
    with pytest.raises(ValueError):
        RadialProfile.sampled([0.5, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        RadialProfile.sampled([0.0, 1.0], [1.0])


def test_scaled_keeps_support():
    b = bump().scaled(-3.0)
    assert b.support_radius == 1.0
    assert b(0.0) == pytest.approx(-3.0)
    assert b.derivative(np.array(0.5)) == pytest.approx(-3.0 * bump().derivative(np.array(0.5)))


def test_source_field_sampled_and_weighted():
    s = np.linspace(0, 1, 6)
    r = np.linspace(0, 1, 6)
    S, R = np.meshgrid(s, r, indexing="ij")
    F = SourceField(s_grid=s, r_grid=r, values=S + R, rho_weight=-0.5)
    assert F(0.4, 0.25) == pytest.approx((0.4 + 0.25) * 0.25 ** -0.5)
    assert SourceField(s_grid=s, r_grid=r, values=0 * S).is_zero
    assert np.all(SourceField.zero()(np.ones(3), np.ones(3)) == 0.0)
    with pytest.raises(ValueError):
        SourceField(s_grid=s, r_grid=r, values=S[:, :3])
    G = SourceField.analytic(lambda a, b: a * b, support_radius=1.0)
    assert G(2.0, 0.5) == 1.0 and G(2.0, 1.5) == 0.0
    assert math.isinf(SourceField.analytic(lambda a, b: a).support_radius)
