"""Fixed and graded Gauss rules for integrands with endpoint singularities.

All rules are returned on a reference interval and mapped by the caller, so
that thousands of integrals with the same singular structure can be done as
one vectorised reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs shared by the kernel and the light-cone integrators.

    ``near_singular_threshold`` is the ratio (distance of an outside
    singularity) / (interval length) below which geometric grading kicks in.
    """

    nodes_per_panel: int = 16
    max_panels: int = 64
    target_rel_tol: float = 1e-10
    near_singular_threshold: float = 0.5

    def __post_init__(self):
        if self.nodes_per_panel < 4:
            raise ValueError("nodes_per_panel must be >= 4")
        if not self.target_rel_tol > 0:
            raise ValueError("target_rel_tol must be positive")
        if self.max_panels < 2:
            raise ValueError("max_panels must be >= 2")

    @property
    def grading_levels(self) -> int:
        """Dyadic levels toward a log-singular end for the target tolerance.

        Gauss panels already integrate ln x to a few digits, so the
        innermost panel only needs to shrink below about tol^(3/4).
        """
        levels = int(np.ceil(0.75 * np.log2(1.0 / self.target_rel_tol))) + 1
        return int(min(max(levels, 2), self.max_panels))


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate=None):
        super().__init__(message if estimate is None else f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


@lru_cache(maxsize=None)
def gauss_legendre01(n: int):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi01_left(n: int, alpha: float):
    """Nodes/weights for int_0^1 x^alpha f(x) dx."""
    x, w = roots_jacobi(n, 0.0, alpha)
    return 0.5 * (x + 1.0), w * 0.5 ** (alpha + 1.0)


@lru_cache(maxsize=None)
def gauss_jacobi01_right(n: int, beta: float):
    """Nodes/weights for int_0^1 (1-x)^beta f(x) dx."""
    x, w = roots_jacobi(n, beta, 0.0)
    return 0.5 * (x + 1.0), w * 0.5 ** (beta + 1.0)


@lru_cache(maxsize=None)
def graded_rule01(n: int, levels: int, both_ends: bool = False, right_levels: int | None = None):
    """Composite Gauss-Legendre on [0, 1] graded dyadically toward 0.

    Panels are [2^-(k+1), 2^-k] for k < levels plus [0, 2^-levels].  With
    ``both_ends`` the interval is halved and the right half is graded toward
    1 with ``right_levels`` levels (default: same as the left).
    """
    x, w = gauss_legendre01(n)

    def one_side(lv):
        edges = np.concatenate([[0.0], 2.0 ** -np.arange(lv, -1, -1)])
        a, b = edges[:-1], edges[1:]
        return ((a[:, None] + (b - a)[:, None] * x[None, :]).ravel(),
                ((b - a)[:, None] * w[None, :]).ravel())

    nodes, weights = one_side(levels)
    if both_ends:
        rn, rw = one_side(levels if right_levels is None else right_levels)
        nodes = np.concatenate([0.5 * nodes, 1.0 - 0.5 * rn[::-1]])
        weights = np.concatenate([0.5 * weights, 0.5 * rw[::-1]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=None)
def composite_rule01(n: int, panels: int):
    x, w = gauss_legendre01(n)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1], edges[1:]
    nodes = (a[:, None] + (b - a)[:, None] * x[None, :]).ravel()
    weights = ((b - a)[:, None] * w[None, :]).ravel()
    return nodes, weights


def _panel_edges(L: float, d: float, threshold: float, max_levels: int):
    """Dyadic breakpoints on [0, L] toward a singularity at -d (d >= 0)."""
    if d >= threshold * L:
        return np.array([0.0, 0.5 * L, L])
    levels = int(np.ceil(np.log2(0.5 * L / d))) if d > 0 else max_levels
    levels = max(1, min(levels, max_levels))
    inner = 0.5 * L * 2.0 ** -np.arange(levels, -1, -1)
    return np.concatenate([[0.0], inner, [L]])


def near_singular_jacobi(L, d, alpha, beta, n, threshold=0.5, max_levels=60):
    """Rule for int_0^L y^alpha (L-y)^beta h(y) dy with h singular at y = -d.

    The first panel absorbs y^alpha with a Gauss-Jacobi rule, the last one
    absorbs (L-y)^beta, and the panels in between are dyadically graded
    toward 0 so that the nearby singularity of h is resolved.  Returns
    ``(nodes, weights, truncated)`` where ``truncated`` flags that the
    grading hit ``max_levels`` before reaching the scale of ``d``.
    """
    edges = _panel_edges(L, d, threshold, max_levels)
    truncated = d < edges[1] * 0.5 if d > 0 else True
    xl, wl = gauss_jacobi01_left(n, float(alpha))
    xr, wr = gauss_jacobi01_right(n, float(beta))
    xg, wg = gauss_legendre01(n)
    out_x, out_w = [], []
    a0, b0 = edges[0], edges[1]
    y = a0 + (b0 - a0) * xl
    out_x.append(y)
    out_w.append(wl * (b0 - a0) ** (alpha + 1.0) * (L - y) ** beta)
    for a, b in zip(edges[1:-2], edges[2:-1]):
        y = a + (b - a) * xg
        out_x.append(y)
        out_w.append(wg * (b - a) * y ** alpha * (L - y) ** beta)
    a1, b1 = edges[-2], edges[-1]
    y = a1 + (b1 - a1) * xr
    out_x.append(y)
    out_w.append(wr * (b1 - a1) ** (beta + 1.0) * y ** alpha)
    return np.concatenate(out_x), np.concatenate(out_w), truncated
