"""Dimension shift, critical exponents, regime classification and lifespan laws.

The radial problem with potential ``V r^-2`` in ``R^n`` becomes, after the
substitution ``u = r^((n-A)/2) U``, a wave equation in the (possibly
fractional) dimension ``A = 2 + sqrt((n-2)^2 + 4V)``.  Everything here is a
pure function of ``(n, V, p)`` or ``(n, A, p)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# relative tolerance used to decide p == p_d, p == p_S, ...
EXPONENT_MATCH_TOL = 1e-9


class ParameterError(ValueError):
    """Raised for physically inadmissible parameters."""


def hardy_threshold(n: float) -> float:
    return -((n - 2.0) ** 2) / 4.0


def dimension_shift(n: float, V: float) -> float:
    """Effective dimension A = 2 + sqrt((n-2)^2 + 4V)."""
    if n < 2:
        raise ParameterError(f"spatial dimension n={n} must be >= 2")
    disc = (n - 2.0) ** 2 + 4.0 * V
    if disc < 0:
        raise ParameterError(
            f"V={V} is below the Hardy threshold -(n-2)^2/4={hardy_threshold(n):.6g} for n={n}"
        )
    return 2.0 + math.sqrt(disc)


def potential_from_dimension(n: float, A: float) -> float:
    """Inverse of :func:`dimension_shift` for A >= 2."""
    if A < 2:
        raise ParameterError(f"A={A} < 2 has no real potential")
    return ((A - 2.0) ** 2 - (n - 2.0) ** 2) / 4.0


@dataclass(frozen=True)
class ProblemParams:
    n: float
    V: float
    p: float
    epsilon: float

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError(f"n={self.n} must be >= 2")
        if self.V < hardy_threshold(self.n):
            raise ParameterError(
                f"V={self.V} is below the Hardy threshold {hardy_threshold(self.n):.6g}"
            )
        if not self.p > 1:
            raise ParameterError(f"p={self.p} must be > 1")
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon={self.epsilon} must be >= 0")

    @property
    def A(self) -> float:
        return dimension_shift(self.n, self.V)


def h_strauss(p, n):
    return (n - 1.0) * p * p - (n + 1.0) * p - 2.0


def h_fujita(p, m):
    return m * p - (m + 2.0)


def strauss_exponent(n: float) -> float:
    """Positive root of (n-1)p^2 - (n+1)p - 2."""
    if n <= 1:
        raise ParameterError(f"Strauss exponent needs n > 1, got {n}")
    a, b = n - 1.0, n + 1.0
    return (b + math.sqrt(b * b + 8.0 * a)) / (2.0 * a)


def fujita_exponent(m: float) -> float:
    return (m + 2.0) / m


def shifted_fujita_dim(n: float, A: float) -> float:
    return (n + A - 2.0) / 2.0


@dataclass(frozen=True)
class ExponentSet:
    n: float
    A: float
    p_S: float
    p_F: float
    p_d: float
    p_m: float
    p_M: float
    p_t: float
    p_conf: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p_S", "p_F", "p_d", "p_m", "p_M", "p_t", "p_conf")}


def exponent_set(n: float, A: float) -> ExponentSet:
    """All critical exponents for the pair (n, A).

    Formulas are valid for A > 1; the existence theory only uses A >= 2, but
    the borderline curve dips below A = 2 for n = 3.
    """
    if n <= 1 or A <= 1:
        raise ParameterError(f"exponent_set needs n > 1 and A > 1, got n={n}, A={A}")
    return ExponentSet(
        n=n,
        A=A,
        p_S=strauss_exponent(n),
        p_F=(n + A + 2.0) / (n + A - 2.0),
        p_d=2.0 / (A - 1.0),
        p_m=(n + 1.0) / (n - 1.0),
        p_M=(n + 1.0) / (n - A) if n > A else math.inf,
        p_t=(n + A) / (n - 1.0),
        p_conf=(n + 3.0) / (n - 1.0),
    )


def glassey_exponent(m: float) -> float:
    return (m + 1.0) / (m - 1.0)


def glassey_identity_check(n: float, A: float, tol: float = 1e-12) -> bool:
    """p_F at dimension (n+A-2)/2 equals the Glassey exponent at (n+A)/2."""
    if n + A <= 2:
        raise ParameterError("glassey identity needs n + A > 2")
    lhs = fujita_exponent(shifted_fujita_dim(n, A))
    rhs = glassey_exponent((n + A) / 2.0)
    return abs(lhs - rhs) <= tol * max(1.0, abs(lhs))


class RegimeTag(str, enum.Enum):
    STRAUSS = "StraussDominant"
    BORDERLINE = "Borderline"
    FUJITA = "FujitaDominant"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    discriminant: float
    exponents: ExponentSet


def regime_discriminant(n: float, A: float) -> float:
    return (3.0 - A) * (A + n + 2.0) - 8.0


def borderline_dimension(n: float) -> float:
    """Root A > 1 of (3-A)(A+n+2) = 8, i.e. A^2 + (n-1)A - (3n-2) = 0."""
    b, c = n - 1.0, -(3.0 * n - 2.0)
    return (-b + math.sqrt(b * b - 4.0 * c)) / 2.0


def classify_regime(n: float, A: float, tol: float = 1e-10) -> Regime:
    exps = exponent_set(n, A)
    disc = regime_discriminant(n, A)
    if abs(disc) <= tol * 8.0:
        tag = RegimeTag.BORDERLINE
    elif disc < 0:
        tag = RegimeTag.STRAUSS
    else:
        tag = RegimeTag.FUJITA
    return Regime(tag=tag, discriminant=disc, exponents=exps)


class LawForm(str, enum.Enum):
    POWER = "Power"
    POWER_LOG = "PowerLog"
    EXP_POWER = "ExpPower"
    INFINITE = "Infinite"
    NOT_COVERED = "NotCovered"


@dataclass(frozen=True)
class LifespanLaw:
    """T*(eps) = c eps^a |ln eps|^b (Power/PowerLog) or exp(c eps^inner)."""

    form: LawForm
    exponent_of_epsilon: float = 0.0
    log_exponent: float = 0.0
    inner_exponent: float = 0.0
    theorem: str = ""
    branch: str = ""
    note: str = field(default="", compare=False)

    @property
    def finite(self) -> bool:
        return self.form in (LawForm.POWER, LawForm.POWER_LOG, LawForm.EXP_POWER)

    def describe(self) -> str:
        if self.form is LawForm.POWER:
            return f"Power({self.exponent_of_epsilon:.6g})"
        if self.form is LawForm.POWER_LOG:
            return f"PowerLog({self.exponent_of_epsilon:.6g}, log^{self.log_exponent:.6g})"
        if self.form is LawForm.EXP_POWER:
            return f"ExpPower({self.inner_exponent:.6g})"
        if self.form is LawForm.INFINITE:
            return "Infinite"
        return f"NotCovered({self.note})"


def _close(a: float, b: float) -> bool:
    return math.isfinite(b) and abs(a - b) <= EXPONENT_MATCH_TOL * max(1.0, abs(b))


def _m1_law(p, n, A, regime: Regime) -> LifespanLaw:
    e = regime.exponents
    hS = h_strauss(p, n)
    hF = h_fujita(p, shifted_fujita_dim(n, A))
    tag = regime.tag
    th = "2<=A<=3"
    if tag is RegimeTag.STRAUSS:
        if _close(p, e.p_d):
            return LifespanLaw(LawForm.POWER_LOG, (p - 1) / hF, 1.0 / hF, theorem=th, branch="p=p_d")
        if p < e.p_d:
            return LifespanLaw(LawForm.POWER, (p - 1) / hF, theorem=th, branch="p<p_d")
        if _close(p, e.p_S):
            return LifespanLaw(LawForm.EXP_POWER, inner_exponent=p * (1 - p), theorem=th, branch="p=p_S")
        if p < e.p_S:
            return LifespanLaw(LawForm.POWER, 2 * p * (p - 1) / hS, theorem=th, branch="p_d<p<p_S")
        return LifespanLaw(LawForm.INFINITE, theorem=th, branch="p>p_S")
    if tag is RegimeTag.BORDERLINE:
        if _close(p, e.p_d):
            return LifespanLaw(LawForm.EXP_POWER, inner_exponent=(1 - p) / 2, theorem=th, branch="p=p_d")
        if p < e.p_d:
            return LifespanLaw(LawForm.POWER, (p - 1) / hF, theorem=th, branch="p<p_d")
        return LifespanLaw(LawForm.INFINITE, theorem=th, branch="p>p_d")
    if _close(p, e.p_F):
        return LifespanLaw(LawForm.EXP_POWER, inner_exponent=1 - p, theorem=th, branch="p=p_F")
    if p < e.p_F:
        return LifespanLaw(LawForm.POWER, (p - 1) / hF, theorem=th, branch="p<p_F")
    return LifespanLaw(LawForm.INFINITE, theorem=th, branch="p>p_F")


def _m2_law(p, n) -> LifespanLaw:
    p_S = strauss_exponent(n)
    th = "A>=3"
    if _close(p, p_S):
        return LifespanLaw(LawForm.EXP_POWER, inner_exponent=p * (1 - p), theorem=th, branch="p=p_S")
    if p < p_S:
        return LifespanLaw(LawForm.POWER, 2 * p * (p - 1) / h_strauss(p, n), theorem=th, branch="1<p<p_S")
    return LifespanLaw(LawForm.INFINITE, theorem=th, branch="p>p_S")


def lifespan_law(p: float, n: float, A: float) -> LifespanLaw:
    """Piecewise lower-bound lifespan law for (p, n, A).

    Covered ranges: p_m < p < p_M for 2 <= A <= 3 and 1 < p < p_conf for
    A >= 3.  Anything else, including the endpoints, gives ``NotCovered``.
    """
    if not p > 1:
        raise ParameterError(f"p={p} must be > 1")
    e = exponent_set(n, A)
    if 2.0 <= A <= 3.0 and e.p_m < p < e.p_M and not _close(p, e.p_m) and not _close(p, e.p_M):
        return _m1_law(p, n, A, classify_regime(n, A))
    if A >= 3.0 and p < e.p_conf and not _close(p, e.p_conf):
        return _m2_law(p, n)
    if A < 2:
        note = "A < 2"
    elif A <= 3:
        note = f"outside p_m < p < p_M ({e.p_m:.6g}, {e.p_M:.6g})"
    else:
        note = f"outside 1 < p < p_conf ({e.p_conf:.6g})"
    return LifespanLaw(LawForm.NOT_COVERED, note=note)


def log_lifespan_value(law: LifespanLaw, epsilon: float, c: float = 1.0) -> float:
    """ln T*(eps); +inf for Infinite laws."""
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon={epsilon} must lie in (0, 1)")
    if c <= 0:
        raise ParameterError("c must be positive")
    le = math.log(epsilon)
    if law.form is LawForm.POWER:
        return math.log(c) + law.exponent_of_epsilon * le
    if law.form is LawForm.POWER_LOG:
        return math.log(c) + law.exponent_of_epsilon * le + law.log_exponent * math.log(-le)
    if law.form is LawForm.EXP_POWER:
        return c * math.exp(law.inner_exponent * le)
    if law.form is LawForm.INFINITE:
        return math.inf
    raise ParameterError(f"law is not covered: {law.note}")


def lifespan_value(law: LifespanLaw, epsilon: float, c: float = 1.0) -> float:
    """T*(eps), overflowing to +inf rather than raising."""
    lt = log_lifespan_value(law, epsilon, c)
    if lt > 709.0:
        return math.inf
    return math.exp(lt)


def lifespan_slope(p: float, n: float, A: float) -> float:
    """d ln T*/d ln eps of a Power branch."""
    law = lifespan_law(p, n, A)
    if law.form is not LawForm.POWER:
        raise ValueError(f"slope is only defined for Power laws, got {law.describe()}")
    return law.exponent_of_epsilon


def implicit_lifespan_residual(T, p, n, A, epsilon, a=1.0):
    """eps^(p-1) T^(-h_F) ln T - a, with h_F = h_F(p; (n+A-2)/2)."""
    hF = h_fujita(p, shifted_fujita_dim(n, A))
    return epsilon ** (p - 1) * T ** (-hF) * np.log(T) - a


def lifespan_implicit(p: float, n: float, A: float, epsilon: float, a: float = 1.0,
                      rel_tol: float = 1e-10) -> float:
    """Solve eps^(p-1) T^(((-n-A+2)p+n+A+2)/2) ln T = a for T >= 3.

    The T-exponent equals -h_F(p; (n+A-2)/2), so for eps -> 0 the root
    behaves like eps^((p-1)/h_F) |ln eps|^(1/h_F).
    """
    if a <= 0:
        raise ParameterError("a must be positive")
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must lie in (0, 1)")
    hF = h_fujita(p, shifted_fujita_dim(n, A))
    if hF >= 0:
        raise ParameterError(f"implicit law needs h_F < 0 (p below p_F), got h_F={hF:.6g}")
    # work in x = ln T; g is increasing in x for x >= ln 3
    lead = (p - 1) * math.log(epsilon)

    def g(x):
        return lead - hF * x + math.log(x) - math.log(a)

    lo = math.log(3.0)
    if g(lo) > 0:
        raise ValueError(
            f"no root with T >= 3: eps={epsilon} too large (residual at T=3 is positive)"
        )
    hi = 2.0 * lo
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("failed to bracket implicit lifespan root")
    x = brentq(g, lo, hi, xtol=1e-14, rtol=rel_tol * 1e-3, maxiter=500)
    return math.exp(x)


def implicit_lifespan_asymptotic(p, n, A, epsilon):
    """eps^((p-1)/h_F) |ln eps|^(1/h_F), the scale of :func:`lifespan_implicit`."""
    hF = h_fujita(p, shifted_fujita_dim(n, A))
    return epsilon ** ((p - 1) / hF) * abs(math.log(epsilon)) ** (1.0 / hF)
