"""Linear radial wave problem in effective dimension A.

Solves u_tt - (u_rr + (A-1)/r u_r) = F with u(0) = f, u_t(0) = g through
the kernel representation

    u_g(t, r) = r^((1-A)/2) int rho^((A-1)/2) g(rho) I_A(mu) drho,
    mu = (r^2 + rho^2 - t^2) / (2 r rho),

over max(0, r-t) < rho < t+r, with u_f = d/dt u_{g=f} and the Duhamel term
u_F = int_0^t S(t-s) F(s) ds.  All point evaluations are vectorised: each
point gets the same fixed graded rule mapped onto its own cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .kernel import KernelParams, kernel_table
from .profiles import RadialProfile, SourceField
from .quadrature import QuadratureConfig, composite_rule01, gauss_legendre01, graded_rule01

DEFAULT_SOLVER_CONFIG = QuadratureConfig(nodes_per_panel=8, max_panels=64, target_rel_tol=1e-9)
R_MIN = 1e-6
FD_STEP = 4e-3
TIME_LEVELS = 10
CHUNK = 2_000_000
POWER_LEVELS = 8


def bracket(a):
    """<a> = sqrt(a^2 + 4)."""
    return np.sqrt(np.asarray(a, dtype=float) ** 2 + 4.0)


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    r: float

    def __post_init__(self):
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")


@dataclass
class SolutionField:
    """u sampled on a tensor grid, rows are times and columns radii."""

    t: np.ndarray
    r: np.ndarray
    u: np.ndarray
    A: float
    config: QuadratureConfig | None = None
    error_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.t.size, self.r.size):
            raise ValueError("u must have shape (len(t), len(r))")

    def time_index(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[i] - t) > tol * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the time grid")
        return i

    @property
    def finite(self):
        return bool(np.all(np.isfinite(self.u)))


def _rules(A, cfg):
    n, L = cfg.nodes_per_panel, cfg.grading_levels
    if KernelParams.from_dimension(A).is_odd:
        # polynomial kernel, no singular end: plain composite Gauss
        return None, composite_rule01(n, 4)
    return True, graded_rule01(n, L)


def cone_rule(A, tau, r, R, cfg=None):
    """Nodes and weights so that u_g(tau, r) = sum_k w_k g(rho_k).

    ``tau`` and ``r`` are 1-d arrays of equal length, ``R`` is the support
    radius of the data (may be inf).  The weights already include
    (rho/r)^((A-1)/2) I_A(mu).  Returned arrays have shape (P, M); unused
    slots carry zero weight.
    """
    cfg = cfg or DEFAULT_SOLVER_CONFIG
    tau = np.asarray(tau, dtype=float)
    r = np.asarray(r, dtype=float)
    kern = kernel_table(float(A))
    half = (A - 1.0) / 2.0
    rule1, rule2 = _rules(A, cfg)
    L = cfg.grading_levels

    # piece 2: |tau-r| < rho < tau+r, graded toward the lower end
    x2, w2 = rule2
    lo = np.abs(tau - r)
    hi = np.minimum(tau + r, R)
    length = np.clip(hi - lo, 0.0, None)
    # slivers left over from rounding carry no mass but can land on mu = -1
    length = np.where(length > 1e-13 * np.maximum(1.0, tau + r), length, 0.0)
    delta = length[:, None] * x2[None, :]
    rho2 = lo[:, None] + delta
    wq2 = length[:, None] * w2[None, :]
    gap = (2.0 * np.clip(r - tau, 0.0, None))[:, None] + delta  # r + rho - tau
    with np.errstate(divide="ignore", invalid="ignore"):
        opm2 = gap * (r[:, None] + rho2 + tau[:, None]) / (2.0 * r[:, None] * rho2)
        k2 = kern(opm2 - 1.0, opm2)
        wt2 = np.where(wq2 > 0, wq2 * (rho2 / r[:, None]) ** half * k2, 0.0)
    rho2 = np.where(wq2 > 0, rho2, 0.0)
    if rule1 is None:
        return rho2, wt2

    # piece 1: 0 < rho < tau - r (only when tau > r).  In delta = tau-r-rho
    # the kernel's log point sits at delta = 0 and varies on the scale r, so
    # panels are geometric in units of r up to D/2; the half next to rho = 0
    # is graded toward that end for the power-type behaviour there.
    xg, wg = gauss_legendre01(cfg.nodes_per_panel)
    D = np.minimum(np.clip(tau - r, 0.0, None), R)
    D = np.where(D > 1e-13 * np.maximum(1.0, tau + r), D, 0.0)
    full = np.clip(tau - r, 0.0, None)  # distance from rho = 0 to the log point
    with np.errstate(divide="ignore", invalid="ignore"):
        span = np.where(D > 0, np.log2(np.maximum(D / r, 1.0)), 0.0)
    K = L + int(np.ceil(np.max(span, initial=0.0))) + 1
    edges = r[:, None] * 2.0 ** (np.arange(K + 1) - L)[None, :]
    edges[:, 0] = 0.0
    # geometric part covers delta in [0, D/2] measured from the log point
    # when it is inside the support, else the whole [0, D] is handled below
    inside = (full <= R)[:, None]
    half_len = np.where(inside[:, 0], 0.5 * D, 0.0)
    edges = np.minimum(edges, half_len[:, None])
    a, b = edges[:, :-1], edges[:, 1:]
    dl = (a[:, :, None] + (b - a)[:, :, None] * xg[None, None, :]).reshape(len(r), -1)
    wdl = ((b - a)[:, :, None] * wg[None, None, :]).reshape(len(r), -1)
    rho1a = full[:, None] - dl
    # remaining part rho in [0, D - half_len], graded toward rho = 0
    xp, wp = graded_rule01(cfg.nodes_per_panel, POWER_LEVELS)
    rest = D - half_len
    rho1b = rest[:, None] * xp[None, :]
    rho1 = np.concatenate([rho1a, rho1b], axis=1)
    wq1 = np.concatenate([wdl, rest[:, None] * wp[None, :]], axis=1)
    back = full[:, None] - rho1  # tau - r - rho, exact on the geometric part
    back[:, : dl.shape[1]] = dl
    with np.errstate(divide="ignore", invalid="ignore"):
        opm1 = -back * (r[:, None] + rho1 + tau[:, None]) / (2.0 * r[:, None] * rho1)
        k1 = kern(opm1 - 1.0, opm1)
        wt1 = np.where(wq1 > 0, wq1 * (rho1 / r[:, None]) ** half * k1, 0.0)
    rho1 = np.where(wq1 > 0, rho1, 0.0)
    return np.concatenate([rho1, rho2], axis=1), np.concatenate([wt1, wt2], axis=1)


def _chunks(P, M):
    step = max(1, CHUNK // max(M, 1))
    for a in range(0, P, step):
        yield slice(a, min(P, a + step))


def _support(profile):
    return getattr(profile, "support_radius", math.inf)


def solve_g_many(g: RadialProfile, A, t, r, cfg=None, r_min=R_MIN):
    """u_g at arrays of (t, r); t may be negative (odd extension in t)."""
    cfg = cfg or DEFAULT_SOLVER_CONFIG
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    shape = t.shape
    tt, rr = t.ravel(), np.maximum(r.ravel(), r_min)
    sign = np.sign(tt)
    tau = np.abs(tt)
    out = np.zeros(tau.shape)
    R = _support(g)
    M = cfg.nodes_per_panel * (3 * cfg.grading_levels + POWER_LEVELS + 24)
    for sl in _chunks(tau.size, M):
        rho, w = cone_rule(A, tau[sl], rr[sl], R, cfg)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[sl] = np.sum(np.where(w != 0.0, w * g(rho), 0.0), axis=1)
    out = np.where(tau == 0.0, 0.0, out * sign)
    return out.reshape(shape)


def solve_g(g: RadialProfile, A, pt: SpacetimePoint, cfg=None) -> float:
    return float(solve_g_many(g, A, pt.t, pt.r, cfg))


def solve_f_many(f: RadialProfile, A, t, r, cfg=None, step=FD_STEP, return_error=False):
    """u_f = d/dt u_{g=f}, by central differences with two Richardson steps.

    u_{g=f} is odd in t, so differences straddling t = 0 stay centred.
    """
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    hs = [step, step / 2.0, step / 4.0]
    tt = np.concatenate([t.ravel() + s * h for h in hs for s in (1.0, -1.0)])
    rr = np.tile(r.ravel(), 2 * len(hs))
    vals = solve_g_many(f, A, tt, rr, cfg).reshape(2 * len(hs), -1)
    D = [(vals[2 * i] - vals[2 * i + 1]) / (2.0 * h) for i, h in enumerate(hs)]
    R1 = [(4.0 * D[1] - D[0]) / 3.0, (4.0 * D[2] - D[1]) / 3.0]
    best = (16.0 * R1[1] - R1[0]) / 15.0
    best = best.reshape(t.shape)
    if return_error:
        return best, np.abs(best - R1[1].reshape(t.shape))
    return best


def solve_f(f: RadialProfile, A, pt: SpacetimePoint, cfg=None) -> float:
    return float(solve_f_many(f, A, pt.t, pt.r, cfg))


def _time_rule(t, r, levels=TIME_LEVELS, n=8):
    """Nodes in s on [0, t], split at s = t - r and graded at every edge."""
    x, w = graded_rule01(n, levels, both_ends=True)
    cut = t - r
    if 0.0 < cut < t:
        pieces = [(0.0, cut), (cut, t)]
    else:
        pieces = [(0.0, t)]
    s = np.concatenate([a + (b - a) * x for a, b in pieces])
    ws = np.concatenate([(b - a) * w for a, b in pieces])
    return s, ws


def duhamel_many(F: SourceField, A, t, r, cfg=None, r_min=R_MIN, time_levels=TIME_LEVELS):
    """u_F at arrays of (t, r) by nested quadrature over the backward cone."""
    cfg = cfg or DEFAULT_SOLVER_CONFIG
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    shape = t.shape
    tt, rr = t.ravel(), np.maximum(r.ravel(), r_min)
    out = np.zeros(tt.shape)
    R = _support(F)
    for i in range(tt.size):
        if tt[i] <= 0.0:
            continue
        s, ws = _time_rule(tt[i], rr[i], time_levels)
        tau = tt[i] - s
        rho, w = cone_rule(A, tau, np.full_like(tau, rr[i]), R, cfg)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = F(np.broadcast_to(s[:, None], rho.shape), rho)
            out[i] = np.dot(ws, np.sum(np.where(w != 0.0, w * vals, 0.0), axis=1))
    return out.reshape(shape)


def duhamel(F: SourceField, A, pt: SpacetimePoint, cfg=None) -> float:
    return float(duhamel_many(F, A, pt.t, pt.r, cfg))


def solve_linear(A, t_grid, r_grid, f=None, g=None, F=None, cfg=None, r_min=R_MIN,
                 error_estimate=False) -> SolutionField:
    """u = u_f + u_g + u_F on the tensor grid (t_grid x r_grid)."""
    cfg = cfg or DEFAULT_SOLVER_CONFIG
    t_grid = np.asarray(t_grid, dtype=float)
    r_grid = np.asarray(r_grid, dtype=float)
    T, Rr = np.meshgrid(t_grid, r_grid, indexing="ij")
    u = np.zeros(T.shape)
    err = 0.0
    if f is not None:
        vf, ef = solve_f_many(f, A, T, Rr, cfg, return_error=True)
        u += vf
        err += float(np.max(ef)) if ef.size else 0.0
    if g is not None:
        u += solve_g_many(g, A, T, Rr, cfg, r_min)
    if F is not None:
        u += duhamel_many(F, A, T, Rr, cfg, r_min)
    if error_estimate and g is not None:
        coarse = QuadratureConfig(nodes_per_panel=max(4, cfg.nodes_per_panel - 2),
                                  max_panels=cfg.max_panels, target_rel_tol=cfg.target_rel_tol * 100)
        err += float(np.max(np.abs(solve_g_many(g, A, T, Rr, coarse, r_min) - solve_g_many(g, A, T, Rr, cfg, r_min))))
    if not np.all(np.isfinite(u)):
        raise FloatingPointError("non-finite values in linear solution")
    return SolutionField(t_grid, r_grid, u, float(A), cfg, err if (f is not None or error_estimate) else None,
                         meta={"r_min": r_min})


def classical_a3(t, r, f=None, g=None, g_primitive=None):
    """Closed-form radial solution for A = 3 (oracle for the kernel solver).

    ``g_primitive(x)`` should return int_0^x rho g(rho) drho; without it the
    primitive is computed with adaptive quadrature.
    """
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    out = np.zeros(t.shape)
    if f is not None:
        a, b = t + r, np.abs(t - r)
        out += ((t + r) * f(a) - (t - r) * f(b)) / (2.0 * r)
    if g is not None:
        if g_primitive is None:
            def g_primitive(x):
                x = np.atleast_1d(x)
                return np.array([integrate.quad(lambda s: s * float(g(s)), 0.0, xi,
                                                limit=200, epsabs=1e-15, epsrel=1e-13)[0] for xi in x])
        out += (g_primitive(t + r) - g_primitive(np.abs(t - r))) / (2.0 * r)
    return out


def energy(u: SolutionField, A, t) -> float:
    """E(t) = 1/2 int r^(A-1) (u_t^2 + u_r^2) dr on the field's grid."""
    i = u.time_index(t)
    if u.t.size < 3 or u.r.size < 3:
        raise ValueError("energy needs at least 3 times and 3 radii")
    ut = np.gradient(u.u, u.t, axis=0, edge_order=2)[i]
    ur = np.gradient(u.u[i], u.r, edge_order=2)
    dens = u.r ** (A - 1.0) * (ut * ut + ur * ur)
    return 0.5 * float(integrate.trapezoid(dens, u.r))


@dataclass
class DecayReport:
    times: np.ndarray
    W: np.ndarray
    reference_max: float
    sup: float
    ratio: float
    factor: float
    passed: bool

    def as_dict(self):
        return {"reference_max": self.reference_max, "sup": self.sup, "ratio": self.ratio,
                "factor": self.factor, "passed": self.passed}


def decay_weight(t, r, A):
    """<t+r>^((A-1)/2) <t-r>^((A-1)/2)."""
    return (bracket(t + r) * bracket(t - r)) ** ((A - 1.0) / 2.0)


def decay_check(u: SolutionField, A, factor=3.0, t_ref=4.0) -> DecayReport:
    """W(t) = max_r <t+r>^((A-1)/2) <t-r>^((A-1)/2) |u(t, r)| against its early maximum."""
    T, R = np.meshgrid(u.t, u.r, indexing="ij")
    W = np.max(decay_weight(T, R, A) * np.abs(u.u), axis=1)
    early = u.t <= t_ref
    ref = float(np.max(W[early])) if early.any() else float(W[0])
    sup = float(np.max(W))
    ratio = sup / ref if ref > 0 else (0.0 if sup == 0 else math.inf)
    return DecayReport(u.t.copy(), W, ref, sup, ratio, factor, bool(ratio <= factor))
