"""Semilinear problem u_tt - Delta_A u = r^w |u|^p by Picard iteration.

With u = r^((n-A)/2) U the original equation for U in n dimensions with
the inverse-square potential becomes the radial problem in dimension A with
source weight w = ((A-n)p + n - A)/2.  Each Picard step solves a linear
problem on a uniform (t, r) grid:

* A = 3 uses v = r u, for which the radial operator is the 1-d wave
  operator; the source is integrated over characteristic diamonds.
* any other A uses the kernel representation with product integration:
  the source is interpolated by hat functions in r and the cone weights of
  every hat are precomputed once per time lag.

Runs are causal, so a single run on [0, T] answers the iteration verdict for
every shorter horizon; the lifespan search uses that.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline, RectBivariateSpline

from . import linear
from .exponents import ParameterError, ProblemParams, exponent_set
from .kernel import KernelParams
from .linear import R_MIN, SolutionField, bracket, cone_rule
from .profiles import RadialProfile, SourceField, bump
from .quadrature import QuadratureConfig, gauss_jacobi01_left, gauss_legendre01

POINTS_PER_UNIT = 16
BLOWUP_FACTOR = 1e6
VALUE_CLIP = 1e100
GRID_BUDGET = 40_000_000
LAG_RULE = QuadratureConfig(nodes_per_panel=6, max_panels=64, target_rel_tol=1e-7)


class BudgetError(RuntimeError):
    pass


def source_weight_exponent(n, A, p):
    return ((A - n) * p + n - A) / 2.0


def choose_weight_k(p, n, A):
    """Weight index per the existence theorem's case table (1 outside it)."""
    if 2.0 <= A <= 3.0:
        ex = exponent_set(n, A)
        if math.isclose(p, ex.p_t, rel_tol=0, abs_tol=1e-9):
            return 3
        if ex.p_m < p < ex.p_t:
            return 2
    return 1


@dataclass(frozen=True)
class WeightFunctions:
    """omega_k(t, r) = <t+r>^((A-1)/2) beta_k(t-r)."""

    k: int
    A: float
    n: float
    p: float

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError("k must be 1, 2 or 3")

    def beta(self, a):
        b = bracket(a)
        half = (self.A - 1.0) / 2.0
        if self.k == 1:
            return b ** half
        if self.k == 2:
            return b ** (((self.n - 1.0) * self.p - self.n - 1.0) / 2.0)
        return b ** half / np.log(b)

    def __call__(self, t, r):
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        return bracket(t + r) ** ((self.A - 1.0) / 2.0) * self.beta(t - r)


def data_norm_psi(U0: RadialProfile, U1: RadialProfile, n, A, r_max=None, samples=200_001):
    """Weighted sup norm of the original data, by dense sampling.

    ||r^((n-A+2)/2) U0'|| + ||r^((n-A)/2) U0|| + ||r^((n-A+2)/2) U1||.
    """
    if r_max is None:
        supp = max(U0.support_radius, U1.support_radius)
        if not math.isfinite(supp):
            raise ValueError("give r_max for data without compact support")
        r_max = supp
    r = np.linspace(0.0, r_max, samples)[1:]
    a = (n - A + 2.0) / 2.0
    b = (n - A) / 2.0
    return float(np.max(np.abs(r ** a * U0.derivative(r))) + np.max(np.abs(r ** b * U0(r)))
                 + np.max(np.abs(r ** a * U1(r))))


def _transformed(profile: RadialProfile, scale, power):
    def f(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(r > 0, np.abs(r) ** power, 1.0 if power == 0 else 0.0)
        return scale * w * profile(r)
    return RadialProfile(f, support_radius=profile.support_radius, smoothness=profile.smoothness)


@dataclass
class SemilinearProblem:
    params: ProblemParams
    U0: RadialProfile = field(default_factory=bump)
    U1: RadialProfile = field(default_factory=bump)
    T_max: float = 8.0
    points_per_unit: int = POINTS_PER_UNIT
    weight_k: int | None = None

    def __post_init__(self):
        if not self.T_max > 0:
            raise ParameterError("T_max must be positive")
        if self.points_per_unit < 2:
            raise ParameterError("points_per_unit must be >= 2")
        if not math.isfinite(max(self.U0.support_radius, self.U1.support_radius)):
            raise ParameterError("data must have compact support")
        if self.weight_k is None:
            self.weight_k = choose_weight_k(self.p, self.n, self.A)

    @property
    def n(self):
        return self.params.n

    @property
    def p(self):
        return self.params.p

    @property
    def epsilon(self):
        return self.params.epsilon

    @property
    def A(self):
        return self.params.A

    @property
    def f(self):
        return _transformed(self.U0, self.epsilon, (self.n - self.A) / 2.0)

    @property
    def g(self):
        return _transformed(self.U1, self.epsilon, (self.n - self.A) / 2.0)

    @property
    def data_support(self):
        return max(self.U0.support_radius, self.U1.support_radius)

    @property
    def source_weight(self):
        return source_weight_exponent(self.n, self.A, self.p)

    @property
    def psi(self):
        return data_norm_psi(self.U0, self.U1, self.n, self.A)

    @property
    def weights(self):
        return WeightFunctions(self.weight_k, self.A, self.n, self.p)

    def with_epsilon(self, epsilon):
        pr = ProblemParams(self.n, self.params.V, self.p, epsilon)
        return SemilinearProblem(pr, self.U0, self.U1, self.T_max, self.points_per_unit, self.weight_k)

    def with_horizon(self, T):
        return SemilinearProblem(self.params, self.U0, self.U1, T, self.points_per_unit, self.weight_k)

    def grid(self):
        h = 1.0 / self.points_per_unit
        Nt = int(math.ceil(self.T_max / h - 1e-9))
        Nr = int(math.ceil((Nt * h + self.data_support) / h)) + 2
        return h, np.arange(Nt + 1) * h, np.arange(Nr + 1) * h


def source_transform(u: SolutionField, n, A, p, threshold=VALUE_CLIP) -> SourceField:
    """F = rho^w |u|^p as a sampled field; the weight stays analytic."""
    big = np.abs(u.u) > threshold
    base = np.abs(np.clip(u.u, -threshold, threshold)) ** p
    return SourceField(s_grid=u.t, r_grid=u.r, values=base,
                       rho_weight=source_weight_exponent(n, A, p), smoothness=1,
                       overflow=bool(big.any() or not np.all(np.isfinite(u.u))))


def _even_axis_fill(u):
    """u(t, 0) from the two nearest columns (u is even in r)."""
    u[:, 0] = (4.0 * u[:, 1] - u[:, 2]) / 3.0
    return u


class _A3Operator:
    """Grid solver for A = 3 via v = r u and characteristic diamonds."""

    def __init__(self, prob: SemilinearProblem):
        self.prob = prob
        self.h, self.t, self.r = prob.grid()
        self.w = prob.source_weight

    def homogeneous(self):
        prob = self.prob
        T, R = np.meshgrid(self.t, self.r, indexing="ij")
        f, g = prob.f, prob.g
        supp = prob.data_support
        # int_0^x rho g(rho) drho on a fine grid, then splined
        xs = np.linspace(0.0, supp, 4001)
        xg, wg = np.polynomial.legendre.leggauss(8)
        a, b = xs[:-1], xs[1:]
        nodes = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * xg[None, :]
        cell = (0.5 * (b - a)[:, None] * wg[None, :] * nodes * g(nodes)).sum(axis=1)
        Q = CubicSpline(xs, np.concatenate([[0.0], np.cumsum(cell)]))

        def prim(x):
            return Q(np.minimum(x, supp))

        def xf(x):
            out = np.zeros_like(x)
            nz = x != 0.0
            out[nz] = x[nz] * f(np.abs(x[nz]))
            return out

        with np.errstate(divide="ignore", invalid="ignore"):
            u = ((xf(T + R) - xf(T - R)) + (prim(T + R) - prim(np.abs(T - R)))) / (2.0 * R)
        return _even_axis_fill(u)

    def duhamel(self, base):
        """u_F for F = r^w * base on the grid (base sampled on the grid)."""
        h, r = self.h, self.r
        with np.errstate(divide="ignore", invalid="ignore"):
            rw = np.where(r > 0, r ** (1.0 + self.w), 0.0)
        G = base * rw[None, :]
        Nt, Nr = G.shape[0] - 1, G.shape[1] - 1
        V = np.zeros_like(G)
        h2 = h * h
        if Nt >= 1:
            Gp = np.concatenate([G[0, 1:], [0.0]])
            Gm = np.concatenate([[0.0], G[0, :-1]])
            V[1] = 0.5 * (h2 / 12.0 * (Gm + Gp) + h2 / 2.0 * G[0] + h2 / 3.0 * G[1])
            V[1, 0] = 0.0
        for i in range(1, Nt):
            Gi = G[i]
            V[i + 1, 1:Nr] = (V[i, 2:] + V[i, :-2] - V[i - 1, 1:Nr]
                              + 0.5 * (4.0 * h2 / 3.0 * Gi[1:Nr]
                                       + h2 / 6.0 * (G[i + 1, 1:Nr] + G[i - 1, 1:Nr] + Gi[2:] + Gi[:-2])))
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(r[None, :] > 0, V / r[None, :], 0.0)
        return _even_axis_fill(u)


class _KernelOperator:
    """Grid solver for general A by product integration against the kernel."""

    def __init__(self, prob: SemilinearProblem, rule: QuadratureConfig = LAG_RULE):
        self.prob = prob
        self.h, self.t, self.r = prob.grid()
        self.rule = rule
        Nt, Nr = self.t.size - 1, self.r.size - 1
        if Nt * (Nr + 1) ** 2 > GRID_BUDGET:
            raise BudgetError(
                f"lag matrices need {Nt * (Nr + 1) ** 2:.3g} entries, above the budget "
                f"{GRID_BUDGET:.3g}; lower T_max or points_per_unit")
        self._M = None

    def homogeneous(self):
        prob = self.prob
        T, R = np.meshgrid(self.t, self.r, indexing="ij")
        u = linear.solve_f_many(prob.f, prob.A, T, np.maximum(R, R_MIN))
        u += linear.solve_g_many(prob.g, prob.A, T, R)
        return u

    def lag_matrices(self):
        if self._M is not None:
            return self._M
        h, r = self.h, self.t
        Nt, Nr = self.t.size - 1, self.r.size - 1
        rr = np.maximum(self.r, R_MIN)
        w_exp = self.prob.source_weight
        M = np.zeros((Nt + 1, Nr + 1, Nr + 1))
        for q in range(1, Nt + 1):
            tau = np.full(Nr + 1, q * h)
            rho, wt = cone_rule(self.prob.A, tau, rr, Nr * h, self.rule)
            with np.errstate(divide="ignore", invalid="ignore"):
                wt = np.where(wt != 0.0, wt * rho ** w_exp, 0.0)
            x = rho / h
            l = np.minimum(np.floor(x).astype(np.int64), Nr)
            frac = x - l
            rows = np.broadcast_to(np.arange(Nr + 1)[:, None], l.shape)
            flat_lo = (rows * (Nr + 2) + l).ravel()
            flat_hi = flat_lo + 1
            acc = np.bincount(flat_lo, (wt * (1.0 - frac)).ravel(), minlength=(Nr + 1) * (Nr + 2))
            acc += np.bincount(flat_hi, (wt * frac).ravel(), minlength=(Nr + 1) * (Nr + 2))
            M[q] = acc.reshape(Nr + 1, Nr + 2)[:, : Nr + 1]
        self._M = M
        return M

    def duhamel(self, base):
        M = self.lag_matrices()
        h = self.h
        Nt = base.shape[0] - 1
        u = np.zeros_like(base)
        for i in range(1, Nt + 1):
            lags = M[i:0:-1]  # lag i - m for m = 0 .. i-1
            c = np.ones(i)
            c[0] = 0.5
            u[i] = h * np.einsum("m,mjl,ml->j", c, lags, base[:i])
        return u


def grid_operator(prob: SemilinearProblem):
    if KernelParams.from_dimension(prob.A).is_odd and abs(prob.A - 3.0) < 1e-12:
        return _A3Operator(prob)
    return _KernelOperator(prob)


@dataclass
class IterationState:
    j: int
    field: SolutionField
    weighted_sup: float
    diff_norm: float
    contraction_ratio: float
    row_sup: np.ndarray
    row_diff: np.ndarray


class Verdict(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    INDETERMINATE = "indeterminate"


@dataclass
class IterationResult:
    verdict: Verdict
    state: IterationState
    history: list
    row_sups: np.ndarray
    row_diffs: np.ndarray
    tol: float
    blowup_threshold: float
    reason: str = ""

    @property
    def field(self):
        return self.state.field

    def window_verdicts(self):
        """Verdict codes, deciding iteration and reason for every horizon t_0 .. t_I."""
        return window_verdicts(self.row_sups, self.row_diffs, self.tol, self.blowup_threshold)

    def window_verdict(self, I):
        codes, iters, reasons = window_verdicts(self.row_sups[:, : I + 1], self.row_diffs[:, : I + 1],
                                                self.tol, self.blowup_threshold)
        return _CODES[codes[-1]], int(iters[-1]), reasons[-1]

    def summary(self):
        return {"verdict": self.verdict.value, "iterations": self.state.j, "reason": self.reason,
                "weighted_sup": self.state.weighted_sup, "diff_norm": self.state.diff_norm,
                "contraction_ratio": self.state.contraction_ratio}


_CODES = {0: Verdict.INDETERMINATE, 1: Verdict.CONVERGED, 2: Verdict.DIVERGED, 3: Verdict.DIVERGED}
_REASONS = {0: "max_iter", 1: "converged", 2: "norm_blowup", 3: "contraction_lost"}


def window_verdicts(row_sups, row_diffs, tol, threshold):
    """First verdict per horizon from per-iteration, per-time-row norms.

    Row i of the inputs is iteration i; column I is the time row t_I.  For
    horizon I the norms are the running maxima over columns 0 .. I.  Events,
    in order of precedence at a given iteration: norm above ``threshold``
    (blow-up), diff <= tol * sup (converged, from iteration 1 on), and the
    diff norm failing to decrease twice in a row (contraction lost).
    Returns integer codes (0 undecided, 1 converged, 2 blow-up, 3 lost),
    the deciding iteration and the reason strings.
    """
    S = np.maximum.accumulate(np.asarray(row_sups, dtype=float), axis=1)
    D = np.maximum.accumulate(np.asarray(row_diffs, dtype=float), axis=1)
    J, N = S.shape
    blow = ~np.isfinite(S) | (S > threshold)
    conv = np.zeros_like(blow)
    conv[1:] = D[1:] <= tol * S[1:]
    lost = np.zeros_like(blow)
    if J >= 3:
        inc = np.zeros_like(blow)
        with np.errstate(invalid="ignore"):
            inc[1:] = (D[1:] >= D[:-1]) & (D[:-1] > 0)
        lost[2:] = inc[2:] & inc[1:-1]
    codes = np.zeros(N, dtype=int)
    iters = np.full(N, J - 1)
    undecided = np.ones(N, dtype=bool)
    for j in range(J):
        for code, ev in ((2, blow[j]), (1, conv[j]), (3, lost[j])):
            hit = undecided & ev
            codes[hit] = code
            iters[hit] = j
            undecided &= ~hit
        if not undecided.any():
            break
    return codes, iters, [_REASONS[c] for c in codes]


class PicardRunner:
    """Holds the grid operator and the homogeneous part for one problem."""

    def __init__(self, prob: SemilinearProblem):
        self.prob = prob
        self.op = grid_operator(prob)
        self.u_lin = self.op.homogeneous()
        self.t, self.r = self.op.t, self.op.r
        T, R = np.meshgrid(self.t, self.r, indexing="ij")
        self.omega = prob.weights(T, R)
        self.threshold = BLOWUP_FACTOR * max(prob.epsilon * prob.psi, 1e-300)

    def field(self, u, j):
        return SolutionField(self.t, self.r, u, self.prob.A, meta={"iteration": j, "epsilon": self.prob.epsilon})

    def norms(self, u, u_prev):
        with np.errstate(over="ignore", invalid="ignore"):
            ws = np.max(self.omega * np.abs(u), axis=1)
            wd = np.max(self.omega * np.abs(u - u_prev), axis=1)
        ws = np.where(np.isfinite(ws), ws, np.inf)
        wd = np.where(np.isfinite(wd), wd, np.inf)
        return ws, wd

    def initial_state(self):
        u0 = self.u_lin.copy()
        ws, wd = self.norms(u0, np.zeros_like(u0))
        return IterationState(0, self.field(u0, 0), float(ws.max()), float(wd.max()), math.nan, ws, wd)

    def step(self, state: IterationState) -> IterationState:
        prob = self.prob
        with np.errstate(over="ignore", invalid="ignore"):
            base = np.abs(np.nan_to_num(np.clip(state.field.u, -VALUE_CLIP, VALUE_CLIP), nan=VALUE_CLIP)) ** prob.p
        u = self.u_lin + self.op.duhamel(base)
        ws, wd = self.norms(u, state.field.u)
        diff = float(wd.max())
        ratio = diff / state.diff_norm if state.diff_norm > 0 else (0.0 if diff == 0 else math.inf)
        return IterationState(state.j + 1, self.field(u, state.j + 1), float(ws.max()), diff, ratio, ws, wd)


def picard_step(state: IterationState | None, prob: SemilinearProblem, runner: PicardRunner | None = None):
    """One Picard step; ``state=None`` returns the first iterate u_0."""
    runner = runner or PicardRunner(prob)
    if state is None:
        return runner.initial_state()
    return runner.step(state)


def iterate(prob: SemilinearProblem, tol=1e-8, max_iter=60, runner: PicardRunner | None = None,
            stop_early=True) -> IterationResult:
    """Picard iteration until convergence, divergence or ``max_iter`` steps.

    With ``stop_early=False`` the iteration goes on until every shorter
    horizon has a verdict as well (or ``max_iter``), so that one run can be
    queried for all horizons through :meth:`IterationResult.window_verdict`.
    """
    runner = runner or PicardRunner(prob)
    state = runner.initial_state()
    sups, diffs = [state.row_sup], [state.row_diff]
    history = [{"j": 0, "weighted_sup": state.weighted_sup, "diff_norm": state.diff_norm,
                "contraction_ratio": state.contraction_ratio}]
    thr = runner.threshold
    while state.j < max_iter:
        codes, _, _ = window_verdicts(np.array(sups), np.array(diffs), tol, thr)
        if stop_early and codes[-1] != 0:
            break
        if not stop_early and np.all(codes != 0):
            break
        state = runner.step(state)
        sups.append(state.row_sup)
        diffs.append(state.row_diff)
        history.append({"j": state.j, "weighted_sup": state.weighted_sup, "diff_norm": state.diff_norm,
                        "contraction_ratio": state.contraction_ratio})
    sups, diffs = np.array(sups), np.array(diffs)
    codes, iters, reasons = window_verdicts(sups, diffs, tol, thr)
    return IterationResult(_CODES[codes[-1]], state, history, sups, diffs, tol, thr, reasons[-1])


# ---------------------------------------------------------------- weak form

@dataclass(frozen=True)
class BumpTestFunction:
    """phi(t, r) = chi(t) psi(r) with chi = (1-((t-c)/a)^2)^4_+, psi = (1-(r/b)^2)^4_+."""

    c: float
    a: float
    b: float

    def chi(self, t, d=0):
        x = (np.asarray(t, dtype=float) - self.c) / self.a
        y = np.clip(1.0 - x * x, 0.0, None)
        if d == 0:
            return y ** 4
        if d == 1:
            return -8.0 * x * y ** 3 / self.a
        return (-8.0 * y ** 3 + 48.0 * x * x * y ** 2) / self.a ** 2

    def psi_parts(self, r, A):
        """psi and Delta_A psi."""
        x = np.asarray(r, dtype=float) ** 2 / self.b ** 2
        y = np.clip(1.0 - x, 0.0, None)
        b2 = self.b ** 2
        psi = y ** 4
        lap = (-8.0 * y ** 3 + 48.0 * x * y ** 2 - 8.0 * (A - 1.0) * y ** 3) / b2
        return psi, lap


def default_test_functions(T, R):
    """Five built-in test functions inside (-inf, T) x [0, R)."""
    spec = [(0.0, 0.9, 0.9), (0.25, 0.6, 0.6), (0.4, 0.5, 0.8), (0.1, 0.8, 0.4), (-0.2, 0.9, 0.7)]
    return [BumpTestFunction(c * T, a * T, b * R) for c, a, b in spec]


def _panel_rule(lo, hi, panels, nodes, alpha=0.0):
    """Composite Gauss rule on [lo, hi] for int x^alpha g(x) dx.

    With ``lo == 0`` the first panel absorbs x^alpha through Gauss-Jacobi;
    the other panels use Gauss-Legendre times x^alpha.
    """
    edges = np.linspace(lo, hi, panels + 1)
    xg, wg = gauss_legendre01(nodes)
    a_, b_ = edges[:-1], edges[1:]
    x = (a_[:, None] + (b_ - a_)[:, None] * xg[None, :])
    w = (b_ - a_)[:, None] * wg[None, :]
    if alpha != 0.0:
        w = w * x ** alpha
        if lo == 0.0:
            s, ws = gauss_jacobi01_left(nodes, float(alpha))
            x[0], w[0] = b_[0] * s, ws * b_[0] ** (alpha + 1.0)
    return x.ravel(), w.ravel()


def _spline(t, r, vals):
    k_t, k_r = min(3, t.size - 1), min(3, r.size - 1)
    return RectBivariateSpline(t, r, vals, kx=k_t, ky=k_r, s=0)


def weak_residual(u: SolutionField, prob: SemilinearProblem | None = None, testfns=None, *,
                  f=None, g=None, F=None, A=None, n=None, p=None, nodes=6):
    """Normalised residual of the weak formulation against test functions.

    For each phi: |int Fphi r^(A-1) - int u (phi_tt - Delta_A phi) r^(A-1)
    + int (g phi(0) - f phi_t(0)) r^(A-1)| divided by the largest of the
    three integrals taken with absolute integrands; the maximum over the
    test functions is returned.  Grid values of u (and of F when sampled)
    are interpolated by bicubic splines and integrated with composite Gauss
    rules over each test function's support.  Without a problem, give f, g
    and F (an array on the grid, a SourceField or None) plus A.
    """
    if prob is not None:
        A, n, p = prob.A, prob.n, prob.p
        f, g = prob.f, prob.g
        if F is None:
            F = source_transform(u, n, A, p)
    t, r = u.t, u.r
    if t.size < 2 or r.size < 2:
        raise ValueError("need at least 2 times and 2 radii")
    U = _spline(t, r, u.u)
    F_rho = 0.0
    if F is None:
        Fs = None
    elif isinstance(F, SourceField) and F.kind == "sampled":
        Fs, F_rho = _spline(F.s_grid, F.r_grid, F.values), F.rho_weight
    elif isinstance(F, SourceField):
        Fs = F
    else:
        Fs = _spline(t, r, np.asarray(F, dtype=float))
    if testfns is None:
        testfns = default_test_functions(t[-1], r[-1])
    dt, dr = float(np.max(np.diff(t))), float(np.max(np.diff(r)))
    worst = 0.0
    for phi in testfns:
        if phi.c + phi.a >= t[-1] + 1e-12 or phi.b > r[-1] + 1e-12:
            raise ValueError("test function support leaves the grid")
        t_lo, t_hi = max(0.0, phi.c - phi.a), phi.c + phi.a
        nt_p = max(8, int(math.ceil(2 * (t_hi - t_lo) / dt)))
        nr_p = max(8, int(math.ceil(2 * phi.b / dr)))
        tq, wt = _panel_rule(t_lo, t_hi, nt_p, nodes)
        rq, wr = _panel_rule(0.0, phi.b, nr_p, nodes, A - 1.0)
        chi, chi2 = phi.chi(tq), phi.chi(tq, 2)
        psi, lap = phi.psi_parts(rq, A)
        wave = chi2[:, None] * psi[None, :] - chi[:, None] * lap[None, :]
        i2 = U(tq, rq) * wave * wt[:, None] * wr[None, :]
        T2, S2 = float(np.sum(i2)), float(np.sum(np.abs(i2)))
        T1 = S1 = 0.0
        if Fs is not None:
            if F_rho != 0.0:
                rq1, wr1 = _panel_rule(0.0, phi.b, nr_p, nodes, A - 1.0 + F_rho)
                psi1, _ = phi.psi_parts(rq1, A)
            else:
                rq1, wr1, psi1 = rq, wr, psi
            if isinstance(Fs, SourceField):
                Fv = Fs(tq[:, None], rq1[None, :])
            else:
                Fv = Fs(tq, rq1)
            i1 = Fv * chi[:, None] * psi1[None, :] * wt[:, None] * wr1[None, :]
            T1, S1 = float(np.sum(i1)), float(np.sum(np.abs(i1)))
        rq3, wr3 = _panel_rule(0.0, phi.b, 4 * nr_p, nodes, A - 1.0)
        ps, _ = phi.psi_parts(rq3, A)
        fv = f(rq3) if f is not None else 0.0
        gv = g(rq3) if g is not None else 0.0
        dens = wr3 * ps * (gv * phi.chi(0.0) - fv * phi.chi(0.0, 1))
        T3, S3 = float(np.sum(dens)), float(np.sum(np.abs(dens)))
        # scale by absolute integrals so exact cancellation does not divide by ~0
        scale = max(S1, S2, S3)
        if scale == 0.0:
            continue
        worst = max(worst, abs(T1 - T2 + T3) / scale)
    return worst


# ---------------------------------------------------------------- lifespan

class LifespanCriterion(str, enum.Enum):
    CONTRACTION_LOST = "contraction_lost"
    NORM_BLOWUP = "norm_blowup"
    T_MAX_REACHED = "T_max_reached"


@dataclass
class LifespanEstimate:
    T_num: float
    epsilon: float
    criterion: LifespanCriterion
    diagnostics: dict

    def as_dict(self):
        return {"T_num": self.T_num, "epsilon": self.epsilon, "criterion": self.criterion.value,
                **self.diagnostics}


def estimate_lifespan(prob: SemilinearProblem, epsilon=None, T_start=2.0, tol=1e-8, max_iter=80):
    """Numerical lifespan: the largest horizon on which Picard converges.

    Doubles the horizon from ``T_start`` until the iteration fails to
    converge on the full horizon (or ``prob.T_max`` is reached), then
    bisects over horizons inside that last run; shorter horizons are judged
    from the same run by causality.
    """
    if epsilon is not None:
        prob = prob.with_epsilon(epsilon)
    T_cap = prob.T_max
    T = min(T_start, T_cap)
    runs = []
    while True:
        sub = prob.with_horizon(T)
        res = iterate(sub, tol=tol, max_iter=max_iter, stop_early=False)
        nt = len(res.row_sups[0]) - 1
        full, _, why = res.window_verdict(nt)
        runs.append({"T": T, "verdict": full.value, "iterations": res.state.j})
        if full is Verdict.CONVERGED:
            if T >= T_cap:
                return LifespanEstimate(T, prob.epsilon, LifespanCriterion.T_MAX_REACHED,
                                        {"runs": runs, "points_per_unit": prob.points_per_unit,
                                         "bracket": [T, math.inf], "first_failure": None,
                                         "failure_iteration": None})
            T = min(2.0 * T, T_cap)
            continue
        break
    t = np.arange(nt + 1) / prob.points_per_unit
    codes, iters, reasons = res.window_verdicts()
    # bisection for the first horizon that fails; horizons are all judged
    # from the same causal run, so this is exact at the grid resolution
    lo, hi = 0, nt
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if np.all(codes[: mid + 1] == 1):
            lo = mid
        else:
            hi = mid
    hi = int(np.argmax(codes[: hi + 1] != 1)) if np.any(codes[: hi + 1] != 1) else hi
    lo = max(hi - 1, 0)
    why, j = reasons[hi], iters[hi]
    crit = LifespanCriterion.NORM_BLOWUP if why == "norm_blowup" else LifespanCriterion.CONTRACTION_LOST
    diag = {"runs": runs, "points_per_unit": prob.points_per_unit, "bracket": [float(t[lo]), float(t[hi])],
            "first_failure": why, "failure_iteration": int(j)}
    return LifespanEstimate(float(t[lo]), prob.epsilon, crit, diag)


# ---------------------------------------------------------------- diagnostics

def recover_original(u: SolutionField, n, A) -> SolutionField:
    """U = r^((A-n)/2) u."""
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(u.r > 0, u.r ** ((A - n) / 2.0), 1.0 if A == n else np.nan)
    return SolutionField(u.t, u.r, u.u * w[None, :], u.A, u.config, u.error_estimate,
                         meta={**u.meta, "variables": "original"})


def to_transformed(U: SolutionField, n, A) -> SolutionField:
    """u = r^((n-A)/2) U."""
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(U.r > 0, U.r ** ((n - A) / 2.0), 1.0 if A == n else np.nan)
    return SolutionField(U.t, U.r, U.u * w[None, :], U.A, U.config, U.error_estimate,
                         meta={**U.meta, "variables": "transformed"})


def norm_exponent_q(n, p):
    return 2.0 * (p - 1.0) / ((n + 3.0) - (n - 1.0) * p)


def theorem_m2_norms(U: SolutionField, n, p) -> dict:
    """N(t) = (1+t)^alpha ||r^((n+1)/(2p)) U(t, .)||_{L^p_r}, alpha = ((n-1)p-n-1)/(2p)."""
    alpha = ((n - 1.0) * p - n - 1.0) / (2.0 * p)
    rw = U.r ** ((n + 1.0) / (2.0 * p))
    dens = np.abs(rw[None, :] * U.u) ** p
    Lp = integrate.trapezoid(dens, U.r, axis=1) ** (1.0 / p)
    series = (1.0 + U.t) ** alpha * Lp
    half = U.t >= U.t[-1] / 2.0
    mid = float(series[np.argmin(np.abs(U.t - U.t[-1] / 2.0))])
    end = float(series[-1])
    return {"alpha": alpha, "q": norm_exponent_q(n, p), "series": series, "sup": float(np.max(series)),
            "finite": bool(np.all(np.isfinite(series))), "half_to_end_ratio": end / mid if mid > 0 else math.nan,
            "max_second_half": float(np.max(series[half]))}
