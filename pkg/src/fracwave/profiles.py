"""Radial data profiles and space-time source fields."""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator


class RadialProfile:
    """A function of r >= 0, either analytic or sampled on a grid.

    Values beyond ``support_radius`` are zero.  Sampled profiles use a cubic
    spline when ``smoothness >= 2`` and linear interpolation otherwise.
    """

    def __init__(self, func=None, *, grid=None, values=None, support_radius=math.inf,
                 smoothness=2, derivative=None, name=None):
        if (func is None) == (grid is None):
            raise ValueError("give exactly one of func or (grid, values)")
        self.smoothness = int(smoothness)
        self.name = name
        self._deriv = derivative
        if func is not None:
            self.kind = "analytic"
            self._func = func
            self.support_radius = float(support_radius)
            self.grid = None
            self.values = None
        else:
            grid = np.asarray(grid, dtype=float)
            values = np.asarray(values, dtype=float)
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
                raise ValueError("grid and values must be 1-d arrays of equal length >= 2")
            if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
                raise ValueError("sampled grid must start at r=0 and be strictly increasing")
            self.kind = "sampled"
            self.grid, self.values = grid, values
            self.support_radius = float(min(support_radius, grid[-1]))
            if self.smoothness >= 2 and grid.size >= 4:
                self._func = CubicSpline(grid, values, bc_type=((1, 0.0), "not-a-knot"))
            else:
                self._func = lambda r: np.interp(r, grid, values)

    @classmethod
    def analytic(cls, func, support_radius=math.inf, smoothness=2, derivative=None, name=None):
        return cls(func, support_radius=support_radius, smoothness=smoothness,
                   derivative=derivative, name=name)

    @classmethod
    def sampled(cls, grid, values, smoothness=2, support_radius=math.inf, name=None):
        return cls(grid=grid, values=values, smoothness=smoothness,
                   support_radius=support_radius, name=name)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self._func(np.abs(r)), dtype=float)
        out = np.broadcast_to(out, r.shape).copy() if out.shape != r.shape else out.copy()
        if math.isfinite(self.support_radius):
            out[np.abs(r) >= self.support_radius] = 0.0
        return out

    def derivative(self, r, h=1e-5):
        r = np.asarray(r, dtype=float)
        if self._deriv is not None:
            out = np.asarray(self._deriv(r), dtype=float)
            out = np.broadcast_to(out, r.shape).copy()
            if math.isfinite(self.support_radius):
                out[r >= self.support_radius] = 0.0
            return out
        if self.kind == "sampled" and isinstance(self._func, CubicSpline):
            out = self._func(r, 1)
            out[r >= self.support_radius] = 0.0
            return out
        return (self(r + h) - self(np.abs(r - h))) / (2.0 * h)

    def scaled(self, c):
        """Profile c * self (same support and smoothness)."""
        d = None if self._deriv is None else (lambda r, f=self._deriv: c * f(r))
        return RadialProfile(lambda r: c * self(r), support_radius=self.support_radius,
                             smoothness=self.smoothness, derivative=d, name=self.name)

    def __repr__(self):
        label = self.name or self.kind
        return f"RadialProfile({label}, support_radius={self.support_radius})"


def bump(radius=1.0, power=4, amplitude=1.0):
    """amplitude * (1 - (r/radius)^2)^power on [0, radius), zero outside."""
    R = float(radius)

    def f(r):
        x = np.clip(1.0 - (np.asarray(r, dtype=float) / R) ** 2, 0.0, None)
        return amplitude * x ** power

    def df(r):
        r = np.asarray(r, dtype=float)
        x = np.clip(1.0 - (r / R) ** 2, 0.0, None)
        return -amplitude * power * x ** (power - 1) * 2.0 * r / R ** 2

    return RadialProfile(f, support_radius=R, smoothness=power - 1, derivative=df,
                         name=f"bump(R={R:g},m={power})")


def constant(c=1.0):
    return RadialProfile(lambda r: np.full(np.shape(r), float(c)), name=f"const({c:g})")


def monomial(k, c=1.0):
    return RadialProfile(lambda r: c * np.asarray(r, dtype=float) ** k,
                         derivative=lambda r: c * k * np.asarray(r, dtype=float) ** (k - 1),
                         name=f"r^{k}")


class SourceField:
    """F(s, rho) for s >= 0, rho >= 0.

    Either analytic ``func(s, rho)`` or samples on a tensor grid.  Sampled
    fields may carry an explicit radial weight so that ``F = rho^w * base``
    with only ``base`` interpolated; this keeps singular weights such as
    rho^(-1/2) exact.
    """

    def __init__(self, func=None, *, s_grid=None, r_grid=None, values=None,
                 rho_weight=0.0, support_radius=math.inf, smoothness=1, overflow=False):
        if (func is None) == (values is None):
            raise ValueError("give exactly one of func or sampled values")
        self.rho_weight = float(rho_weight)
        self.smoothness = int(smoothness)
        self.overflow = bool(overflow)
        if func is not None:
            self.kind = "analytic"
            self._func = func
            self.support_radius = float(support_radius)
            self.s_grid = self.r_grid = self.values = None
        else:
            s_grid = np.asarray(s_grid, dtype=float)
            r_grid = np.asarray(r_grid, dtype=float)
            values = np.asarray(values, dtype=float)
            if values.shape != (s_grid.size, r_grid.size):
                raise ValueError("values must have shape (len(s_grid), len(r_grid))")
            self.kind = "sampled"
            self.s_grid, self.r_grid, self.values = s_grid, r_grid, values
            self.support_radius = float(min(support_radius, r_grid[-1]))
            method = "cubic" if smoothness >= 2 and min(values.shape) >= 4 else "linear"
            self._interp = RegularGridInterpolator((s_grid, r_grid), values, method=method,
                                                   bounds_error=False, fill_value=0.0)

    @property
    def is_zero(self):
        return self.kind == "sampled" and not np.any(self.values)

    def __call__(self, s, rho):
        s, rho = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(rho, dtype=float))
        if self.kind == "analytic":
            out = np.asarray(self._func(s, rho), dtype=float)
            out = np.broadcast_to(out, s.shape).copy()
        else:
            pts = np.stack([s.ravel(), np.abs(rho).ravel()], axis=-1)
            out = self._interp(pts).reshape(s.shape)
            if self.rho_weight != 0.0:
                out = np.asarray(out * np.abs(rho) ** self.rho_weight)
        if math.isfinite(self.support_radius):
            out[np.abs(rho) >= self.support_radius] = 0.0
        return out

    @classmethod
    def zero(cls):
        return cls(lambda s, rho: np.zeros(np.shape(s)), support_radius=0.0)

    @classmethod
    def analytic(cls, func, support_radius=math.inf, smoothness=2):
        return cls(func, support_radius=support_radius, smoothness=smoothness)
