"""Self-check suites behind ``fracwave verify``.

Each suite returns a list of :class:`Check` records.  Suites stop at
nothing: every identity is evaluated so that the report is complete, and
the first failing one is named in the summary.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernel as K
from .exponents import (borderline_dimension, exponent_set, glassey_identity_check, h_strauss,
                        implicit_lifespan_asymptotic, implicit_lifespan_residual, lifespan_implicit)
from .linear import (classical_a3, decay_check, duhamel_many, solve_f_many, solve_g_many,
                     solve_linear)
from .profiles import SourceField, bump, constant, monomial


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "tol": float(self.tol), "detail": self.detail}


def _le(name, value, tol, detail=""):
    value = float(value)
    return Check(name, bool(np.isfinite(value) and value <= tol), value, tol, detail)


def kernel_suite(rng=None):
    out = []
    # normalisation constants; everything else inherits them
    for th in (0.25, 0.5, 0.7):
        refl = K.gamma(th) * K.gamma(1.0 - th) * math.sin(math.pi * th) / math.pi
        out.append(_le(f"gamma_reflection[theta={th}]", abs(refl - 1.0), 1e-12))
    out.append(_le("rgamma_inverse", abs(K.rgamma(3.3) * K.gamma(3.3) - 1.0), 1e-12))
    for A in (2.0, 2.5, 3.0, 3.7, 4.5, 6.2):
        v = float(K.eval_kernel(A, 1.0 - 1e-4))
        out.append(_le(f"limit_half[A={A}]", abs(v - 0.5), 5e-3))
        above = np.atleast_1d(K.eval_kernel(A, np.array([1.0 + 1e-9, 1.5, 10.0])))
        out.append(Check(f"zero_above_one[A={A}]", bool(np.all(above == 0.0)),
                         float(np.max(np.abs(above))), 0.0))
    for A in (3.0, 5.0, 7.0):
        below = np.atleast_1d(K.eval_kernel(A, np.array([-1.5, -4.0, -40.0])))
        out.append(Check(f"odd_zero_below_minus_one[A={A}]", bool(np.all(below == 0.0)),
                         float(np.max(np.abs(below))), 0.0))
    mu = np.linspace(-0.99, 0.99, 41)
    out.append(_le("closed_form_I3", np.max(np.abs(K.eval_kernel(3.0, mu) - 0.5)), 1e-10))
    out.append(_le("closed_form_I5", np.max(np.abs(K.eval_kernel(5.0, mu) - mu / 2.0)), 1e-10))
    out.append(_le("continuity_A2.999", abs(float(K.eval_kernel(2.999, 0.0)) - 0.5), 2e-2))
    tail = K.kernel_asymptotics_check(2.5, [-8.0, -32.0, -128.0])
    out.append(_le("tail_ratio_spread[A=2.5]", tail["tail_spread_last_two"], 0.05))
    near = K.kernel_asymptotics_check(2.5, [-1 + 1e-4, -1 + 1e-6, -1 + 1e-8])
    out.append(_le("log_slope_spread[A=2.5]", near["log_slope_spread_last_two"], 0.05))
    return out


def oracle_suite(rng=None, points=8):
    rng = rng or np.random.default_rng(0)
    t = rng.uniform(0.05, 5.0, points)
    r = rng.uniform(0.05, 5.0, points)
    F1 = SourceField.analytic(lambda s, rho: np.ones(np.shape(s)))
    out = []
    for A in (2.0, 2.5, 3.0, 3.2, 4.0):
        ex = r ** 2 + A * t ** 2
        errs = {
            "u=1": np.max(np.abs(solve_f_many(constant(1.0), A, t, r) - 1.0)),
            "u=t": np.max(np.abs(solve_g_many(constant(1.0), A, t, r) - t) / t),
            "u=r^2+At^2": np.max(np.abs(solve_f_many(monomial(2), A, t, r) - ex) / ex),
            "u=t^2/2": np.max(np.abs(duhamel_many(F1, A, t, r) - t ** 2 / 2) / (t ** 2 / 2)),
        }
        for k, e in errs.items():
            out.append(_le(f"polynomial[{k},A={A}]", e, 1e-3))
    b = bump()
    u = solve_f_many(b, 3.0, t, r) + solve_g_many(b, 3.0, t, r)
    ref = classical_a3(t, r, f=b, g=b)
    scale = max(np.max(np.abs(ref)), 1e-300)
    out.append(_le("classical_A3", np.max(np.abs(u - ref)) / scale, 1e-6))
    return out


def decay_suite(rng=None, t_end=12.0):
    t = np.arange(0.0, t_end + 0.5, 1.0)
    r = np.arange(0.0, t_end + 1.0 + 1e-9, 0.1)
    u = solve_linear(2.5, t, r, f=bump(), g=bump())
    rep = decay_check(u, 2.5, factor=1.5, t_ref=4.0)
    return [_le("decay_weighted_sup[A=2.5]", rep.ratio, 1.5, f"t <= {t_end:g}")]


def residual_suite(rng=None):
    from .exponents import ProblemParams
    from .semilinear import SemilinearProblem, iterate, weak_residual
    prob = SemilinearProblem(ProblemParams(3, 0.0, 3.0, 0.1), T_max=4.0, points_per_unit=16)
    res = iterate(prob, tol=1e-10, max_iter=40)
    out = [Check("picard_converged[n=3,A=3,p=3]", res.verdict.value == "converged",
                 float(res.state.diff_norm), 1e-10, res.reason)]
    out.append(_le("weak_residual[n=3,A=3,p=3]", weak_residual(res.field, prob), 1e-3))
    return out


def exponents_suite(rng=None, samples=100):
    rng = rng or np.random.default_rng(0)
    out = []
    worst = max(abs(h_strauss(exponent_set(n, 2.5).p_S, n)) for n in range(2, 12))
    out.append(_le("h_S(p_S)=0", worst, 1e-12))
    gap = 0.0
    for n in range(3, 9):
        e = exponent_set(n, borderline_dimension(n))
        gap = max(gap, abs(e.p_d - e.p_S), abs(e.p_d - e.p_F))
    out.append(_le("borderline_coincidence", gap, 1e-9))
    bad = sum(not glassey_identity_check(float(rng.uniform(2, 10)), float(rng.uniform(2, 8)))
              for _ in range(samples))
    out.append(Check("glassey_identity", bad == 0, float(bad), 0.0))
    n, A = 4.0, 2.2
    p = exponent_set(n, A).p_d - 0.05
    res = 0.0
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        T = lifespan_implicit(p, n, A, eps)
        res = max(res, abs(implicit_lifespan_residual(T, p, n, A, eps)))
    out.append(_le("implicit_residual", res, 1e-9))
    r6 = lifespan_implicit(p, n, A, 1e-6) / implicit_lifespan_asymptotic(p, n, A, 1e-6)
    r8 = lifespan_implicit(p, n, A, 1e-8) / implicit_lifespan_asymptotic(p, n, A, 1e-8)
    out.append(_le("implicit_asymptotic_ratio", abs(r8 - r6) / abs(r8), 0.10))
    return out


SUITES = {
    "kernel": (kernel_suite, "kernel identities, closed forms and asymptotics"),
    "oracle": (oracle_suite, "polynomial solutions and the A=3 closed form"),
    "decay": (decay_suite, "weighted sup bound for A=2.5 bump data"),
    "residual": (residual_suite, "weak-form residual of a converged Picard run"),
    "exponents": (exponents_suite, "critical exponent algebra and the implicit lifespan"),
}


def run_suites(names, seed=0):
    """Run suites by name ("all" expands); returns a JSON-ready report."""
    if not names or "all" in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    report = {"seed": seed, "suites": {}, "passed": True, "first_failure": None}
    for name in names:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            checks = SUITES[name][0](rng)
            err = None
        except Exception as exc:  # a crash is a failure of that suite
            checks, err = [], f"{type(exc).__name__}: {exc}"
        ok = err is None and all(c.passed for c in checks)
        report["suites"][name] = {"passed": ok, "seconds": time.perf_counter() - t0,
                                  "checks": [c.as_dict() for c in checks], "error": err}
        if not ok and report["first_failure"] is None:
            bad = next((c.name for c in checks if not c.passed), None)
            report["first_failure"] = f"{name}: {bad or err}"
        report["passed"] = report["passed"] and ok
    return report
