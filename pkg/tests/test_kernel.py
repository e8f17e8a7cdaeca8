import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwave.kernel import (KernelParams, KernelTable, build_coefficients, eval_kernel,
                             kernel_asymptotics_check, leading_coefficient_formula)

# independent high-precision values (mpmath, 40 digits, singularities removed by substitution)
INNER = [
    (2.0, 0.0, 0.59017029950804811),
    (2.0, 0.5, 0.53659100357468219),
    (2.0, -0.9, 0.92575249853646435),
    (2.5, 0.3, 0.54116903663157225),
    (2.5, -0.5, 0.63730565406830098),
    (2.5, 0.99, 0.5004700361611052),
    (2.5, -0.999, 1.3235297770674235),
    (3.7, 0.1, 0.36781072095532948),
    (3.7, -0.95, -0.15581062944825758),
    (4.5, 0.2, 0.21424412178080682),
    (4.5, -0.7, -0.24343601762041853),
]
OUTER = [
    (2.0, -2.0, 0.52732430741573352),
    (2.2, -1.2, 0.63301972317679252),
    (2.5, -1.5, 0.27461372659383131),
    (2.5, -3.0, 0.14507561103419505),
    (3.7, -10.0, -0.0083372767788021339),
    (4.5, -2.0, -0.033238602334287716),
]


@pytest.mark.parametrize("A,mu,ref", INNER + OUTER)
def test_kernel_matches_reference(A, mu, ref):
    assert float(eval_kernel(A, mu)) == pytest.approx(ref, rel=1e-10, abs=1e-13)


def test_params_split():
    kp = KernelParams.from_dimension(4.5)
    assert (kp.k, kp.theta, kp.is_odd) == (1, 0.75, False)
    assert KernelParams.from_dimension(5.0).is_odd
    with pytest.raises(ValueError):
        KernelParams.from_dimension(1.0)


def test_coefficient_tables():
    assert build_coefficients(2.5).terms == ((0, -0.25, 1.0),)
    assert build_coefficients(4.5).terms == ((1, -0.25, 1.5),)
    assert build_coefficients(6.5).leading == pytest.approx(5.25)
    with pytest.raises(ValueError):
        build_coefficients(3.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=6), st.floats(min_value=0.01, max_value=0.99))
def test_prop_leading_coefficient(k, theta):
    A = 1 + 2 * k + 2 * theta
    assert build_coefficients(A).leading == pytest.approx(leading_coefficient_formula(k, theta),
                                                          rel=1e-12)


def test_odd_closed_forms():
    mu = np.linspace(-0.99, 0.99, 21)
    assert np.allclose(eval_kernel(3.0, mu), 0.5, atol=1e-14)
    assert np.allclose(eval_kernel(5.0, mu), mu / 2, atol=1e-14)
    for A in (3.0, 5.0, 7.0):
        assert np.all(eval_kernel(A, np.array([-1.2, -3.0, -50.0])) == 0.0)


@pytest.mark.parametrize("A", [2.0, 2.3, 2.5, 3.7, 4.5, 6.2])
def test_zero_above_one_and_limit(A):
    assert np.all(eval_kernel(A, np.array([1.0 + 1e-12, 2.0, 100.0])) == 0.0)
    assert eval_kernel(A, 1.0) == 0.5
    assert float(eval_kernel(A, 1 - 1e-6)) == pytest.approx(0.5, abs=5e-3)


def test_continuity_across_odd_dimension():
    mu = np.array([-0.5, 0.0, 0.5])
    for A in (2.999, 3.001):
        assert np.max(np.abs(eval_kernel(A, mu) - 0.5)) < 2e-2
    assert np.max(np.abs(eval_kernel(4.999, mu) - mu / 2)) < 2e-2


@pytest.mark.parametrize("A", [2.2, 2.5, 3.7, 4.5])
def test_tail_decay_rate(A):
    rep = kernel_asymptotics_check(A, [-8.0, -32.0, -128.0, -512.0])
    assert rep["tail_spread_last_two"] < 0.05


@pytest.mark.parametrize("A", [2.2, 2.5, 3.7, 4.5])
def test_log_singularity_coefficient(A):
    kp = KernelParams.from_dimension(A)
    coef = (-1) ** (kp.k + 1) * math.sin(math.pi * kp.theta) / (2 * math.pi)
    for side in (+1, -1):
        mu = [-1 + side * 10.0 ** -e for e in (6, 8, 10)]
        rep = kernel_asymptotics_check(A, mu)
        assert rep["log_slope"][-1] == pytest.approx(coef, rel=1e-3)
        assert rep["log_slope_spread_last_two"] < 0.05
        # the plain ratio only converges like 1/ln|1+mu|
        assert rep["log_ratio"][-1] == pytest.approx(coef, rel=0.3)


def test_singular_point_is_signed_infinity():
    assert eval_kernel(2.5, -1.0) == math.inf
    assert eval_kernel(4.5, -1.0) == -math.inf


def test_error_estimate():
    v, err = eval_kernel(2.5, np.array([0.3, -3.0]), return_error=True)
    assert np.all(err < 1e-9)


@pytest.mark.parametrize("A", [2.0, 2.5, 3.0, 4.5])
def test_table_matches_direct(A):
    tab = KernelTable(A)
    rng = np.random.default_rng(3)
    mu = np.concatenate([rng.uniform(-0.999, 0.999, 60), rng.uniform(-40, -1.001, 60),
                         -1 + np.array([1e-9, -1e-9, 1e-5, -1e-5])])
    direct = eval_kernel(A, mu)
    assert np.max(np.abs(tab(mu) - direct) / np.maximum(np.abs(direct), 1e-3)) < 1e-9
    # the one_plus_mu channel agrees with the plain one away from -1
    assert np.allclose(tab(mu[:10], one_plus_mu=1 + mu[:10]), tab(mu[:10]), rtol=1e-13)
