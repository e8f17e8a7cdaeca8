"""CSV, JSON and SVG emission plus the regime diagram data."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .config import CURVES
from .exponents import (LawForm, borderline_dimension, dimension_shift, exponent_set,
                        hardy_threshold, lifespan_law, potential_from_dimension)

REGIONS = ("global", "strauss", "fujita", "not_covered")
# white, light, dark, hatched
REGION_STYLE = {
    "global": ("#ffffff", None),
    "strauss": ("#c6dbef", None),
    "fujita": ("#2171b5", None),
    "not_covered": ("#ffffff", "///"),
}
CURVE_COLORS = {"p_S": "#d62728", "p_F": "#2ca02c", "p_d": "#9467bd", "p_m": "#8c564b",
                "p_M": "#e377c2", "p_t": "#7f7f7f", "p_conf": "#ff7f0e"}


def fmt(x):
    """Round-trippable text for one CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")
    return path


# ---------------------------------------------------------------- regime map

def region_of(p, n, A):
    law = lifespan_law(p, n, A)
    if law.form is LawForm.NOT_COVERED:
        return "not_covered"
    if law.form is LawForm.INFINITE:
        return "global"
    return "strauss" if "p_S" in law.branch else "fujita"


@dataclass
class RegimeMap:
    n: float
    axis: str
    x: np.ndarray
    A: np.ndarray
    curves: dict
    p: np.ndarray
    regions: np.ndarray
    borderline_A: float | None
    intersections: dict

    @property
    def degenerate(self):
        return self.x.size == 1


def _A_of(x, n, axis):
    return x if axis == "A" else dimension_shift(n, x)


def _crossing(fa, fb, lo, hi):
    d = lambda a: fa(a) - fb(a)
    xs = np.linspace(lo, hi, 65)
    vals = [d(a) for a in xs]
    for a, b, va, vb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if va == 0:
            return float(a)
        if va * vb < 0:
            return float(brentq(d, a, b, xtol=1e-14))
    if vals[-1] == 0:
        return float(xs[-1])
    return None


def regime_map(n, axis="A", x_min=2.0, x_max=3.0, p_min=1.0, p_max=4.0, resolution=201,
               curves=CURVES, p_resolution=None):
    """Curve samples and region labels on an (x, p) grid."""
    if axis not in ("A", "V"):
        raise ValueError("axis must be 'A' or 'V'")
    if not (math.isfinite(x_min) and math.isfinite(x_max) and x_min <= x_max):
        raise ValueError("x range must be finite and ordered")
    if not (math.isfinite(p_min) and math.isfinite(p_max) and p_min <= p_max):
        raise ValueError("p range must be finite and ordered")
    if axis == "V" and x_min < hardy_threshold(n):
        raise ValueError("V range starts below the Hardy threshold")
    x = np.array([x_min]) if x_min == x_max else np.linspace(x_min, x_max, resolution)
    A = np.array([_A_of(v, n, axis) for v in x])
    if A.min() < 2:
        raise ValueError("diagram needs A >= 2")
    sets = [exponent_set(n, a) for a in A]
    out = {}
    for c in curves:
        vals = np.array([getattr(s, c) for s in sets])
        if np.all(np.isinf(vals)):
            continue  # e.g. p_M for n = 2
        out[c] = vals
    pr = p_resolution or resolution
    p = np.linspace(max(p_min, 1.0 + 1e-9), p_max, pr)
    regions = np.array([[REGIONS.index(region_of(pp, n, a)) for a in A] for pp in p], dtype=int)
    bA = borderline_dimension(n)
    lo_A, hi_A = float(A.min()), float(A.max())
    borderline = bA if lo_A <= bA <= hi_A else None
    inter = {}
    if x.size > 1:
        fns = {"p_S": lambda a: exponent_set(n, a).p_S, "p_F": lambda a: exponent_set(n, a).p_F,
               "p_d": lambda a: exponent_set(n, a).p_d}
        names = [c for c in ("p_S", "p_F", "p_d") if c in out]
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                cx = _crossing(fns[a], fns[b], lo_A, hi_A)
                if cx is not None:
                    inter[f"{a}/{b}"] = cx if axis == "A" else potential_from_dimension(n, cx)
    return RegimeMap(n, axis, x, A, out, p, regions, borderline, inter)


def regime_csv(rm: RegimeMap, path):
    header = ["x", "A", "V"] + list(rm.curves)
    rows = []
    for i, (xv, a) in enumerate(zip(rm.x, rm.A)):
        rows.append([xv, a, potential_from_dimension(rm.n, a)] + [rm.curves[c][i] for c in rm.curves])
    return write_csv(path, header, rows)


def regions_csv(rm: RegimeMap, path):
    rows = []
    for j, pp in enumerate(rm.p):
        for i, xv in enumerate(rm.x):
            rows.append([xv, rm.A[i], pp, REGIONS[rm.regions[j, i]]])
    return write_csv(path, ["x", "A", "p", "region"], rows)


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def regime_svg(rm: RegimeMap, path, shade=True):
    """SVG with one ``<g id="curve-NAME">`` per curve and shaded regions."""
    plt = _pyplot()
    from matplotlib.patches import Patch
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"path.simplify": False, "svg.hashsalt": "fracwave", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        p_lo, p_hi = float(rm.p[0]), float(rm.p[-1])
        if rm.degenerate:
            x0 = float(rm.x[0])
            xs = np.array([x0 - 0.5, x0 + 0.5])
        else:
            xs = rm.x
        if shade:
            for k, name in enumerate(REGIONS):
                color, hatch = REGION_STYLE[name]
                mask = (rm.regions == k).astype(float)
                if not mask.any():
                    continue
                Z = np.repeat(mask, 2, axis=1) if rm.degenerate else mask
                cs = ax.contourf(xs, rm.p, Z, levels=[0.5, 1.5], colors=[color],
                                 hatches=[hatch], zorder=0)
                cs.set_gid(f"region-{name}")
        # keep every sample inside the canvas so no vertex is dropped; the
        # part outside the frame is hidden by the axes clip path
        pad = 0.02 * max(p_hi - p_lo, 1e-6)
        for c, vals in rm.curves.items():
            yv = np.clip(vals, p_lo - pad, p_hi + pad)
            (line,) = ax.plot(rm.x, yv, color=CURVE_COLORS[c], lw=1.4, label=c, clip_on=True,
                              marker="o" if rm.degenerate else None)
            line.set_gid(f"curve-{c}")
        if rm.borderline_A is not None and not rm.degenerate:
            bx = rm.borderline_A if rm.axis == "A" else potential_from_dimension(rm.n, rm.borderline_A)
            ax.axvline(bx, color="k", ls=":", lw=0.8).set_gid("borderline")
        ax.set_xlim(float(xs[0]), float(xs[-1]))
        ax.set_ylim(p_lo, p_hi)
        ax.set_xlabel("A" if rm.axis == "A" else "V")
        ax.set_ylabel("p")
        ax.set_title(f"n = {rm.n:g}")
        handles, labels = ax.get_legend_handles_labels()
        if shade:
            for name in REGIONS:
                color, hatch = REGION_STYLE[name]
                handles.append(Patch(facecolor=color, edgecolor="k", hatch=hatch, lw=0.5))
                labels.append(name.replace("_", " "))
        ax.legend(handles, labels, fontsize=7, loc="upper right", framealpha=0.9)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def svg_curve_vertices(path):
    """Vertex count of each ``curve-*`` group's main path (for consistency checks)."""
    import xml.etree.ElementTree as ET
    ns = "{http://www.w3.org/2000/svg}"
    root = ET.parse(path).getroot()
    out = {}
    for g in root.iter(f"{ns}g"):
        gid = g.get("id", "")
        if not gid.startswith("curve-"):
            continue
        p = g.find(f"{ns}path")
        if p is None:
            continue
        d = p.get("d", "")
        out[gid[len("curve-"):]] = len(re.findall(r"[ML]", d))
    return out


# ---------------------------------------------------------------- fields

def field_rows(u, U, weight):
    T, R = np.meshgrid(u.t, u.r, indexing="ij")
    return zip(T.ravel(), R.ravel(), u.u.ravel(), U.ravel(), weight.ravel())


def field_csv(path, u, U, weight):
    return write_csv(path, ["t", "r", "u", "U", "weight_W"], field_rows(u, U, weight))


def field_svg(path, u, title=""):
    plt = _pyplot()
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "fracwave", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        idx = np.unique(np.linspace(0, u.t.size - 1, min(6, u.t.size)).astype(int))
        for i in idx:
            ax.plot(u.r, u.u[i], lw=1.2, label=f"t = {u.t[i]:.3g}")
        ax.set_xlabel("r")
        ax.set_ylabel("u")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def lifespan_svg(path, eps, T, slope=None, theory=None):
    plt = _pyplot()
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "fracwave", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.6, 4.2))
        ax.loglog(eps, T, "o-", label="T_num")
        if slope is not None:
            ax.set_title(f"fitted slope {slope:.3f}" + (f", law {theory:.3f}" if theory is not None else ""))
        ax.set_xlabel("epsilon")
        ax.set_ylabel("T")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
