import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwave.exponents import ParameterError, ProblemParams, exponent_set
from fracwave.linear import SolutionField
from fracwave.profiles import SourceField, bump, monomial
from fracwave.semilinear import (BumpTestFunction, LifespanCriterion, SemilinearProblem,
                                 Verdict, WeightFunctions, choose_weight_k, data_norm_psi,
                                 default_test_functions, estimate_lifespan, iterate, norm_exponent_q,
                                 picard_step, recover_original, source_transform,
                                 source_weight_exponent, theorem_m2_norms, to_transformed,
                                 weak_residual, window_verdicts)


def _prob(n=3, V=0.0, p=3.0, eps=0.1, T=4.0, ppu=16, amp=1.0):
    return SemilinearProblem(ProblemParams(n, V, p, eps), U0=bump(amplitude=amp),
                             U1=bump(amplitude=amp), T_max=T, points_per_unit=ppu)


def test_psi_for_bump():
    # n = A: max |U0| + max |r U0'| with U0' = -8 r (1-r^2)^3, peak at r^2 = 1/4
    psi = data_norm_psi(bump(), bump(amplitude=0.0), 3, 3)
    assert psi == pytest.approx(1.84375, rel=1e-6)
    assert data_norm_psi(bump(amplitude=2.0), bump(amplitude=0.0), 3, 3) == pytest.approx(2 * psi)


def test_psi_needs_compact_support():
    with pytest.raises(ValueError):
        data_norm_psi(monomial(2), bump(), 3, 3)


def test_source_weight_and_norm_exponent():
    assert source_weight_exponent(3, 2, 2) == -0.5
    assert source_weight_exponent(3, 3, 5) == 0.0
    assert norm_exponent_q(3, 2.5) == pytest.approx(3.0)


def test_weight_selection():
    n, A = 4.0, 2.5
    e = exponent_set(n, A)
    assert choose_weight_k(e.p_t, n, A) == 3
    assert choose_weight_k(0.5 * (e.p_m + e.p_t), n, A) == 2
    assert choose_weight_k(e.p_t + 0.5, n, A) == 1
    assert choose_weight_k(2.0, 3, 4.0) == 1
    with pytest.raises(ValueError):
        WeightFunctions(4, 3.0, 3.0, 2.0)
    w = WeightFunctions(1, 3.0, 3.0, 2.0)
    assert w(0.0, 0.0) == pytest.approx(4.0)


def test_problem_validation():
    with pytest.raises(ParameterError):
        _prob(T=0.0)
    with pytest.raises(ParameterError):
        _prob(ppu=1)
    with pytest.raises(ParameterError):
        SemilinearProblem(ProblemParams(3, 0.0, 2.0, 0.1), U0=monomial(2))


def test_zero_data_gives_zero_solution():
    res = iterate(_prob(eps=0.0), tol=1e-10)
    assert res.verdict is Verdict.CONVERGED
    assert np.all(res.field.u == 0.0)


def test_first_iterate_scales_linearly():
    a = picard_step(None, _prob(eps=0.01, T=2.0))
    b = picard_step(None, _prob(eps=0.02, T=2.0))
    assert b.weighted_sup / 0.02 == pytest.approx(a.weighted_sup / 0.01, rel=0.05)


def test_converged_run_and_weak_residual():
    prob = _prob()
    res = iterate(prob, tol=1e-10, max_iter=40)
    assert res.verdict is Verdict.CONVERGED and res.reason == "converged"
    assert res.history[-1]["diff_norm"] <= 1e-10 * res.state.weighted_sup
    assert weak_residual(res.field, prob) <= 1e-3


def test_weak_residual_exact_polynomials():
    A, n = 2.5, 3.0
    t = np.linspace(0, 3, 31)
    r = np.linspace(0, 3, 31)
    T, R = np.meshgrid(t, r, indexing="ij")
    # u = r^2 + A t^2 solves the free equation with f = r^2, g = 0
    u = SolutionField(t, r, R ** 2 + A * T ** 2, A)
    assert weak_residual(u, f=monomial(2), A=A, n=n, p=2.0) <= 1e-6
    # u = t^2 / 2 with F = 1 and zero data
    u = SolutionField(t, r, T ** 2 / 2, A)
    one = SourceField.analytic(lambda s, rho: np.ones(np.shape(s)))
    assert weak_residual(u, F=one, A=A, n=n, p=2.0) <= 1e-6
    assert weak_residual(u, F=np.ones_like(T), A=A, n=n, p=2.0) <= 1e-6
    # a wrong field is detected
    bad = SolutionField(t, r, T ** 2, A)
    assert weak_residual(bad, F=one, A=A, n=n, p=2.0) > 1e-2


def test_test_functions_inside_grid():
    fns = default_test_functions(4.0, 5.0)
    assert len(fns) == 5
    for phi in fns:
        assert phi.c + phi.a < 4.0 and phi.b < 5.0
    phi = BumpTestFunction(0.0, 1.0, 1.0)
    h = 1e-5
    t = np.array([0.3])
    assert phi.chi(t, 1) == pytest.approx((phi.chi(t + h) - phi.chi(t - h)) / (2 * h), rel=1e-6)
    u = SolutionField([0.0, 0.5], [0.0, 0.5], np.zeros((2, 2)), 3.0)
    with pytest.raises(ValueError):
        weak_residual(u, testfns=[phi], A=3.0, n=3, p=2.0)


def test_source_transform_flags_overflow():
    u = SolutionField([0.0, 1.0], [0.0, 1.0], np.array([[0.0, 1.0], [2.0, 1e200]]), 2.0)
    F = source_transform(u, 3, 2.0, 2.0)
    assert F.overflow and F.rho_weight == -0.5


def test_recover_original_round_trip():
    t = np.array([0.0, 1.0])
    r = np.array([0.0, 1.0, 4.0])
    u = SolutionField(t, r, np.arange(6.0).reshape(2, 3) + 1, 2.0)
    U = recover_original(u, 3, 2.0)
    # U = r^((A-n)/2) u = u / 2 at r = 4 for n = 3, A = 2
    assert U.u[1, 2] == pytest.approx(u.u[1, 2] / 2)
    back = to_transformed(U, 3, 2.0)
    assert np.allclose(back.u[:, 1:], u.u[:, 1:])
    same = recover_original(u, 3, 3.0)
    assert np.array_equal(same.u, u.u)


def test_weighted_lp_norm_series():
    t = np.linspace(0, 4, 9)
    r = np.linspace(0, 3, 31)
    U = SolutionField(t, r, np.exp(-(r[None, :] - t[:, None]) ** 2), 3.0)
    out = theorem_m2_norms(U, 3, 2.5)
    assert out["q"] == pytest.approx(3.0)
    assert out["finite"] and out["series"].shape == t.shape
    assert out["sup"] >= out["max_second_half"]


def test_window_verdicts_synthetic():
    sups = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, 1e9], [1.0, 1.0, 1e9]])
    diffs = np.array([[1.0, 1.0, 1.0], [1e-12, 0.5, 1e9], [1e-12, 1e-12, 1e9]])
    codes, iters, reasons = window_verdicts(sups, diffs, 1e-8, 1e6)
    assert codes.tolist() == [1, 1, 2]
    assert iters.tolist() == [1, 2, 1]
    assert reasons[-1] == "norm_blowup"
    # diff that stops decreasing twice is contraction lost
    d = np.array([[1.0], [0.5], [0.6], [0.7]])
    codes, _, reasons = window_verdicts(np.ones((4, 1)), d, 1e-12, 1e6)
    assert codes.tolist() == [3] and reasons == ["contraction_lost"]


def test_lifespan_grows_as_epsilon_shrinks():
    prob = _prob(p=2.0, T=64.0, ppu=8, amp=20.0)
    T = [estimate_lifespan(prob, eps).T_num for eps in (0.4, 0.2, 0.1)]
    assert T[0] < T[1] < T[2]
    est = estimate_lifespan(prob, 0.4)
    assert est.criterion in (LifespanCriterion.CONTRACTION_LOST, LifespanCriterion.NORM_BLOWUP)
    lo, hi = est.diagnostics["bracket"]
    assert lo == est.T_num and hi > lo


def test_lifespan_above_strauss_reaches_cap():
    est = estimate_lifespan(_prob(p=3.0, T=8.0, ppu=8), 0.05)
    assert est.criterion is LifespanCriterion.T_MAX_REACHED and est.T_num == 8.0


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=1e-3, max_value=0.05))
def test_prop_small_data_converges(eps):
    res = iterate(_prob(eps=eps, T=2.0, ppu=8), tol=1e-9, max_iter=40)
    assert res.verdict is Verdict.CONVERGED
