import math

import numpy as np
import pytest

from fracwave.linear import (SolutionField, SpacetimePoint, classical_a3, cone_rule, decay_check,
                             decay_weight, duhamel, duhamel_many, energy, solve_f, solve_f_many,
                             solve_g, solve_g_many, solve_linear)
from fracwave.profiles import SourceField, bump, constant, monomial

RNG = np.random.default_rng(11)
T = RNG.uniform(0.1, 4.0, 6)
R = RNG.uniform(0.1, 4.0, 6)


@pytest.mark.parametrize("A", [2.0, 2.5, 3.0, 4.0, 5.3])
def test_polynomial_oracles(A):
    assert np.allclose(solve_f_many(constant(1.0), A, T, R), 1.0, rtol=1e-6)
    assert np.allclose(solve_g_many(constant(1.0), A, T, R), T, rtol=1e-6)
    ex = R ** 2 + A * T ** 2
    assert np.allclose(solve_f_many(monomial(2), A, T, R), ex, rtol=1e-5)
    ex = R ** 2 * T + A * T ** 3 / 3
    assert np.allclose(solve_g_many(monomial(2), A, T, R), ex, rtol=1e-6)


@pytest.mark.parametrize("A", [2.0, 2.5, 3.0, 4.2])
def test_duhamel_oracles(A):
    one = SourceField.analytic(lambda s, rho: np.ones(np.shape(s)))
    assert np.allclose(duhamel_many(one, A, T, R), T ** 2 / 2, rtol=1e-6)
    rho2 = SourceField.analytic(lambda s, rho: rho ** 2)
    # box u = rho^2 with zero data has u = r^2 t^2 / 2 + A t^4 / 12
    ex = R ** 2 * T ** 2 / 2 + A * T ** 4 / 12
    assert np.allclose(duhamel_many(rho2, A, T, R), ex, rtol=1e-6)


def test_pointwise_wrappers_agree():
    pt = SpacetimePoint(1.3, 0.7)
    b = bump()
    assert solve_g(b, 2.5, pt) == pytest.approx(float(solve_g_many(b, 2.5, 1.3, 0.7)))
    assert solve_f(b, 2.5, pt) == pytest.approx(float(solve_f_many(b, 2.5, 1.3, 0.7)))
    one = SourceField.analytic(lambda s, rho: np.ones(np.shape(s)))
    assert duhamel(one, 2.5, pt) == pytest.approx(1.3 ** 2 / 2, rel=1e-6)
    with pytest.raises(ValueError):
        SpacetimePoint(-1.0, 1.0)
    with pytest.raises(ValueError):
        SpacetimePoint(1.0, 0.0)


def test_cone_rule_integrates_constants():
    # g = 1 gives u_g = t
    tau = np.array([0.3, 1.0, 2.5])
    r = np.array([0.5, 0.5, 4.0])
    rho, w = cone_rule(2.5, tau, r, math.inf)
    assert rho.shape == w.shape and rho.shape[0] == 3
    assert np.allclose(w.sum(axis=1), tau, rtol=1e-6)


def test_initial_values():
    b = bump()
    r = np.linspace(0.05, 1.5, 9)
    assert np.allclose(solve_g_many(b, 2.5, 0 * r, r), 0.0, atol=1e-14)
    assert np.allclose(solve_f_many(b, 2.5, 0 * r, r), b(r), atol=1e-6)


@pytest.mark.parametrize("A", [2.0, 2.5, 3.7])
def test_finite_speed_of_propagation(A):
    b = bump(radius=1.0)
    t = np.array([0.5, 1.0, 2.0])
    for tt in t:
        r = tt + 1.0 + np.array([0.01, 0.3, 2.0])
        assert np.all(np.abs(solve_g_many(b, A, tt + 0 * r, r)) < 1e-12)
        assert np.all(np.abs(solve_f_many(b, A, tt + 0 * r, r)) < 1e-10)


def test_a3_matches_closed_form():
    b = bump()
    t = RNG.uniform(0.1, 3.0, 20)
    r = RNG.uniform(0.1, 3.0, 20)
    u = solve_f_many(b, 3.0, t, r) + solve_g_many(b, 3.0, t, r)
    ref = classical_a3(t, r, f=b, g=b)
    assert np.max(np.abs(u - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_solve_linear_grid_and_error():
    u = solve_linear(2.5, [0.0, 0.5, 1.0], [0.1, 0.5, 1.0, 2.0], f=bump(), g=bump())
    assert u.u.shape == (3, 4) and u.finite and u.error_estimate is not None
    assert u.time_index(0.5) == 1
    with pytest.raises(ValueError):
        u.time_index(0.7)
    with pytest.raises(ValueError):
        SolutionField([0, 1], [0, 1], np.zeros((3, 2)), 2.5)


def test_energy_simple_fields():
    t = np.linspace(0, 1, 5)
    r = np.linspace(0, 2, 201)
    zero = SolutionField(t, r, np.zeros((5, 201)), 2.5)
    assert energy(zero, 2.5, 0.5) == 0.0
    lin = SolutionField(t, r, np.repeat(t[:, None], 201, axis=1), 2.5)
    # E = 1/2 int_0^2 r^(A-1) dr
    assert energy(lin, 2.5, 0.5) == pytest.approx(0.5 * 2 ** 2.5 / 2.5, rel=1e-3)


def test_energy_conserved_for_bump():
    A, dr = 2.5, 0.02
    b = bump()
    out = []
    for tc in (1.0, 3.0):
        tg = tc + dr * np.array([-1.0, 0.0, 1.0])
        rg = np.arange(0.0, tc + 1.2, dr)
        out.append(energy(solve_linear(A, tg, rg, f=b, g=b), A, tc))
    assert abs(out[1] - out[0]) / out[0] < 2e-2


def test_decay_helpers():
    t = np.linspace(0, 8, 9)
    r = np.linspace(0, 9, 10)
    assert decay_weight(0.0, 0.0, 3.0) == pytest.approx(4.0)
    rep = decay_check(SolutionField(t, r, np.zeros((9, 10)), 2.5), 2.5)
    assert rep.sup == 0 and rep.ratio == 0 and rep.passed
