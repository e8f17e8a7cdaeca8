"""The fractional-dimension wave kernel I_A(mu).

For ``A = 1 + 2k + 2*theta`` (``0 < theta < 1``) the kernel is evaluated from

* ``mu > 1``: zero;
* ``-1 < mu < 1``: the integrated-by-parts form
  ``2^(-k-theta) / (Gamma(k+theta) Gamma(1-theta)) *
  int_mu^1 (lam-mu)^(-theta) (-d/dlam)^k (1-lam^2)^(k+theta-1) dlam``;
* ``mu < -1``: the defining integral, whose integrand is regular there.

For odd ``A = 1 + 2k`` the distribution collapses to a derivative of a delta
and the kernel is a polynomial on (-1, 1) and zero for ``mu < -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, rgamma

from .quadrature import QuadratureConfig, QuadratureError, near_singular_jacobi

ODD_TOL = 1e-12

DEFAULT_KERNEL_CONFIG = QuadratureConfig(nodes_per_panel=16, max_panels=64, target_rel_tol=1e-12)


@dataclass(frozen=True)
class KernelParams:
    A: float
    k: int
    theta: float
    is_odd: bool

    @classmethod
    def from_dimension(cls, A: float) -> "KernelParams":
        if not A > 1:
            raise ValueError(f"kernel needs A > 1, got {A}")
        half = (A - 1.0) / 2.0
        nearest = round(half)
        if nearest >= 1 and abs(half - nearest) <= ODD_TOL:
            return cls(A=A, k=int(nearest), theta=0.0, is_odd=True)
        k = int(math.floor(half))
        return cls(A=A, k=k, theta=half - k, is_odd=False)


@dataclass(frozen=True)
class CoefficientTable:
    """sum of coeff * lam^a * (1-lam^2)^b, one tuple per term."""

    terms: tuple

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros_like(lam)
        for a, b, c in self.terms:
            out += c * lam ** a * (1.0 - lam * lam) ** b
        return out

    @property
    def leading(self) -> float:
        """Coefficient of the term with the largest power of lam."""
        return max(self.terms, key=lambda t: t[0])[2]


def _differentiate(seed_b: float, times: int) -> dict:
    """Apply (-d/dlam) ``times`` times to (1-lam^2)^seed_b.

    Terms are keyed by (a, i) meaning lam^a (1-lam^2)^(seed_b - i), which
    keeps the exponent bookkeeping exact.
    """
    terms = {(0, 0): 1.0}
    for _ in range(times):
        nxt: dict = {}
        for (a, i), c in terms.items():
            b = seed_b - i
            if a > 0:
                key = (a - 1, i)
                nxt[key] = nxt.get(key, 0.0) - a * c
            if b != 0:
                key = (a + 1, i + 1)
                nxt[key] = nxt.get(key, 0.0) + 2.0 * b * c
        terms = {key: c for key, c in nxt.items() if c != 0.0}
    return terms


@lru_cache(maxsize=64)
def build_coefficients(A: float) -> CoefficientTable:
    """Expansion of (-d/dlam)^k (1-lam^2)^(k+theta-1) for non-odd A."""
    kp = KernelParams.from_dimension(A)
    if kp.is_odd:
        raise ValueError(f"A={A} is odd; the kernel is a closed-form polynomial")
    seed = kp.k + kp.theta - 1.0
    terms = _differentiate(seed, kp.k)
    return CoefficientTable(tuple(sorted((a, seed - i, c) for (a, i), c in terms.items())))


@lru_cache(maxsize=64)
def odd_coefficients(A: float) -> CoefficientTable:
    """Expansion of (-d/dlam)^(k-1) (1-lam^2)^(k-1) for odd A = 1 + 2k."""
    kp = KernelParams.from_dimension(A)
    if not kp.is_odd:
        raise ValueError(f"A={A} is not odd")
    seed = float(kp.k - 1)
    terms = _differentiate(seed, kp.k - 1)
    return CoefficientTable(tuple(sorted((a, seed - i, c) for (a, i), c in terms.items())))


def leading_coefficient_formula(k: int, theta: float) -> float:
    """2^k (k+theta-1)(k+theta-2)...theta, and 1 for k = 0."""
    out = 1.0
    for j in range(k):
        out *= 2.0 * (theta + j)
    return out


def _odd_kernel(kp: KernelParams, mu: np.ndarray) -> np.ndarray:
    table = odd_coefficients(kp.A)
    pref = 2.0 ** (-kp.k) / math.gamma(kp.k)
    out = np.zeros_like(mu)
    inside = (mu > -1.0) & (mu < 1.0)
    out[inside] = pref * table(mu[inside])
    out[mu == 1.0] = 0.5
    out[mu == -1.0] = pref * table(np.array([-1.0]))[0]
    return out


def _inner_branch(kp: KernelParams, mu: float, cfg: QuadratureConfig):
    """-1 < mu < 1 via the coefficient expansion; returns (value, truncated)."""
    table = build_coefficients(kp.A)
    theta = kp.theta
    pref = 2.0 ** (-kp.k - theta) / (gamma(kp.k + theta) * gamma(1.0 - theta))
    om, op = 1.0 - mu, 1.0 + mu
    d = op / om
    total = 0.0
    truncated = False
    for a, b, c in table.terms:
        # lam = mu + (1-mu) x, x in [0, 1]
        x, w, tr = near_singular_jacobi(
            1.0, d, -theta, b, cfg.nodes_per_panel,
            threshold=cfg.near_singular_threshold, max_levels=cfg.max_panels,
        )
        truncated |= tr
        lam = mu + om * x
        h = lam ** a * (op + om * x) ** b
        total += c * om ** (1.0 - theta + b) * np.dot(w, h)
    return pref * total, truncated


def _outer_branch(kp: KernelParams, mu: float, cfg: QuadratureConfig):
    """mu < -1 via the defining integral with y = 1 + lam."""
    A = kp.A
    pref = 2.0 ** ((1.0 - A) / 2.0) * rgamma((A - 1.0) / 2.0) * rgamma((3.0 - A) / 2.0)
    d = -1.0 - mu
    e = (A - 3.0) / 2.0
    y, w, tr = near_singular_jacobi(
        2.0, d, e, e, cfg.nodes_per_panel,
        threshold=cfg.near_singular_threshold, max_levels=cfg.max_panels,
    )
    return pref * np.dot(w, (y + d) ** ((1.0 - A) / 2.0)), tr


def eval_kernel(A: float, mu, cfg: QuadratureConfig | None = None, return_error: bool = False):
    """Evaluate I_A at one or many points by direct quadrature.

    ``mu = 1`` returns the interior limit 1/2.  For non-odd A the kernel has
    a logarithmic singularity at ``mu = -1``; that point returns a signed
    infinity.  With ``return_error`` an error estimate from a coarser rule
    is returned alongside the values.
    """
    if cfg is None:
        cfg = DEFAULT_KERNEL_CONFIG
    kp = KernelParams.from_dimension(A)
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if kp.is_odd:
        vals = _odd_kernel(kp, mu_arr)
        err = np.zeros_like(vals)
    else:
        vals, err = _eval_generic(kp, mu_arr, cfg, return_error)
    if np.ndim(mu) == 0:
        vals, err = vals[0], err[0]
    return (vals, err) if return_error else vals


def _eval_generic(kp, mu_arr, cfg, with_error):
    vals = np.zeros_like(mu_arr)
    err = np.zeros_like(mu_arr)
    coarse = None
    if with_error:
        coarse = QuadratureConfig(
            nodes_per_panel=max(4, cfg.nodes_per_panel - 4), max_panels=cfg.max_panels,
            target_rel_tol=cfg.target_rel_tol, near_singular_threshold=cfg.near_singular_threshold,
        )
    for i, m in enumerate(mu_arr):
        if m > 1.0:
            continue
        if m == 1.0:
            vals[i] = 0.5
            continue
        if m == -1.0:
            probe, _ = _inner_branch(kp, -1.0 + 1e-14, cfg)
            vals[i] = math.copysign(math.inf, probe)
            continue
        branch = _inner_branch if m > -1.0 else _outer_branch
        v, truncated = branch(kp, m, cfg)
        vals[i] = v
        if with_error:
            vc, _ = branch(kp, m, coarse)
            err[i] = abs(v - vc)
            if truncated or err[i] > max(cfg.target_rel_tol * abs(v), 1e-300) * 1e4:
                raise QuadratureError(
                    f"kernel quadrature did not converge at A={kp.A}, mu={m!r}", err[i]
                )
    return vals, err


class KernelTable:
    """Piecewise Chebyshev interpolant of I_A for fast bulk evaluation.

    Panels are dyadic toward the logarithmic point mu = -1 from both sides,
    and mu <= -5 is handled through
    ``G(s) = I_A(mu) (1-mu)^((A-1)/2)`` with ``s = 1/(1-mu)``, which is
    analytic near s = 0.  Points closer to -1 than ``2^-levels`` fall back
    to :func:`eval_kernel`.
    """

    def __init__(self, A: float, degree: int = 16, levels: int = 44,
                 cfg: QuadratureConfig | None = None):
        self.A = float(A)
        self.params = KernelParams.from_dimension(A)
        self.cfg = cfg or DEFAULT_KERNEL_CONFIG
        self.degree = degree
        self.levels = levels
        if self.params.is_odd:
            return
        n = degree + 1
        cheb = np.cos(np.pi * (np.arange(n) + 0.5) / n)
        self._cheb_nodes = cheb
        # panels live in d = |1+mu| on [2^(e-1), 2^e); near -1 the mapping
        # must go through d, since mu itself carries no digits there
        self._right = self._fit(levels + 1, +1.0)   # d < 2, i.e. mu < 1
        self._left = self._fit(levels + 2, -1.0)    # d < 4, i.e. mu > -5
        # tail in s = 1/(1-mu) on (0, 1/4]
        self._tail_edges = [(0.0, 0.125), (0.125, 0.25)]
        coefs = []
        for a, b in self._tail_edges:
            s = a + (b - a) * (cheb + 1.0) / 2.0
            mu = 1.0 - 1.0 / np.maximum(s, 1e-300)
            vals = np.empty_like(s)
            small = s < 1e-12
            vals[~small] = eval_kernel(self.A, mu[~small], self.cfg) * (1.0 - mu[~small]) ** ((self.A - 1) / 2)
            vals[small] = 0.0
            coefs.append(np.polynomial.chebyshev.chebfit(cheb, vals, degree))
        self._tail = (np.array([a for a, _ in self._tail_edges]),
                      np.array([b for _, b in self._tail_edges]), np.ascontiguousarray(np.array(coefs).T))

    def _fit(self, count, side):
        cheb = self._cheb_nodes
        e = np.arange(-self.levels + 1, -self.levels + 1 + count)
        lo, hi = 2.0 ** (e - 1.0), 2.0 ** e
        coefs = np.empty((count, self.degree + 1))
        for i in range(count):
            d = lo[i] + (hi[i] - lo[i]) * (cheb + 1.0) / 2.0
            mu = -1.0 + side * d
            d = side * (1.0 + mu)
            x = (2.0 * d - lo[i] - hi[i]) / (hi[i] - lo[i])
            vals = eval_kernel(self.A, mu, self.cfg)
            coefs[i] = np.polynomial.chebyshev.chebfit(x, vals, self.degree)
        return lo, hi, np.ascontiguousarray(coefs.T)

    @staticmethod
    def _clenshaw(coefs_t, idx, x):
        """Chebyshev sums with per-point panel ``idx``; coefs_t is (degree+1, panels)."""
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        x2 = 2.0 * x
        for j in range(coefs_t.shape[0] - 1, 0, -1):
            b1, b2 = coefs_t[j].take(idx) + x2 * b1 - b2, b1
        return coefs_t[0].take(idx) + x * b1 - b2

    def _eval_side(self, table, mu, d):
        lo, hi, coefs = table
        _, e = np.frexp(d)
        idx = e + self.levels - 1
        ok = idx >= 0
        val = np.empty_like(d)
        i = idx[ok]
        x = (2.0 * d[ok] - lo[i] - hi[i]) / (hi[i] - lo[i])
        val[ok] = self._clenshaw(coefs, i, x)
        if (~ok).any():
            val[~ok] = eval_kernel(self.A, mu[~ok], self.cfg)
        return val

    def __call__(self, mu, one_plus_mu=None):
        """Evaluate at ``mu``.

        Callers that know ``1 + mu`` more accurately than ``mu`` itself
        (nodes clustered at the log point) can pass it as ``one_plus_mu``.
        """
        mu = np.asarray(mu, dtype=float)
        scalar = mu.ndim == 0
        mu = np.atleast_1d(mu)
        shape = mu.shape
        mu = mu.ravel()
        if self.params.is_odd:
            out = _odd_kernel(self.params, mu)
            return out[0] if scalar else out.reshape(shape)
        if one_plus_mu is None:
            opm = 1.0 + mu
        else:
            opm = np.broadcast_to(np.asarray(one_plus_mu, dtype=float), shape).ravel()
        out = np.zeros_like(mu)
        sel = (opm > 0.0) & (mu < 1.0)
        if sel.any():
            out[sel] = self._eval_side(self._right, mu[sel], opm[sel])
        sel = (opm < 0.0) & (mu > -5.0)
        if sel.any():
            out[sel] = self._eval_side(self._left, mu[sel], -opm[sel])
        sel = mu <= -5.0
        if sel.any():
            m = mu[sel]
            s = 1.0 / (1.0 - m)
            lo, hi, coefs = self._tail
            idx = (s >= hi[0]).astype(int)
            a, b = lo[idx], hi[idx]
            x = (2.0 * s - a - b) / (b - a)
            out[sel] = self._clenshaw(coefs, idx, x) * s ** ((self.A - 1) / 2)
        out[mu == 1.0] = 0.5
        if (opm == 0.0).any():
            out[opm == 0.0] = eval_kernel(self.A, -1.0, self.cfg)
        return out[0] if scalar else out.reshape(shape)


@lru_cache(maxsize=16)
def kernel_table(A: float) -> KernelTable:
    return KernelTable(A)


def kernel_asymptotics_check(A: float, mu_samples, cfg: QuadratureConfig | None = None) -> dict:
    """Numerical look at the tail and log behaviour of I_A.

    For samples mu <= -2 reports |I_A| (1-mu)^((A-1)/2); for samples in
    (-2, 1) reports I_A / ln|1+mu| and the increments dI / d ln|1+mu|.
    ``*_spread_last_two`` is the relative change between the last two
    entries of each family.
    """
    kp = KernelParams.from_dimension(A)
    mu = np.asarray(mu_samples, dtype=float)
    vals = np.atleast_1d(eval_kernel(A, mu, cfg))
    report = {"A": A, "odd": kp.is_odd, "mu": mu.tolist(), "values": vals.tolist()}
    tail = mu <= -2.0
    near = (mu > -2.0) & (mu < 1.0) & (mu != -1.0)
    if tail.any():
        ratio = np.abs(vals[tail]) * (1.0 - mu[tail]) ** ((A - 1.0) / 2.0)
        report["tail_ratio"] = ratio.tolist()
        report["tail_spread_last_two"] = _spread(ratio)
    if near.any():
        ratio = vals[near] / np.log(np.abs(1.0 + mu[near]))
        report["log_ratio"] = ratio.tolist()
        report["log_spread_last_two"] = _spread(ratio)
        if near.sum() >= 2:
            # increments remove the additive constant, so they settle much faster
            L = np.log(np.abs(1.0 + mu[near]))
            slope = np.diff(vals[near]) / np.diff(L)
            report["log_slope"] = slope.tolist()
            report["log_slope_spread_last_two"] = _spread(slope)
    if kp.is_odd:
        report["odd_zero_below_minus_one"] = bool(np.all(vals[mu < -1.0] == 0.0))
    return report


def _spread(r):
    if len(r) < 2:
        return 0.0
    return float(abs(r[-1] - r[-2]) / max(abs(r[-1]), 1e-300))
