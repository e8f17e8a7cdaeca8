"""Command-line interface.

    fracwave exponents  --n 3 --V 0 --p 2,3
    fracwave regime-map --n 6 --x-range 2,3 --p-range 1,4
    fracwave solve      --mode semilinear --n 3 --A 3 --p 3 --epsilon 0.1
    fracwave lifespan   --n 3 --V 0 --p 2 --epsilons 0.4,0.2 --amplitude 20
    fracwave verify     kernel exponents

Every command also takes ``--config FILE`` (JSON, see ``fracwave.config``);
flags override the file.  Output goes to ``--outdir``, else the directory in
$FRACWAVE_OUTPUT_DIR, else ``output.dir`` from the config.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as C
from . import report as R
from .exponents import (LawForm, ParameterError, ProblemParams, classify_regime, exponent_set,
                        lifespan_law, potential_from_dimension)
from .linear import decay_weight, energy, solve_linear
from .profiles import SourceField, bump, constant, monomial
from .quadrature import QuadratureConfig, QuadratureError
from .semilinear import weak_residual

log = logging.getLogger("fracwave")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class NumericalFailure(RuntimeError):
    pass


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text):
    vals = _floats(text)
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return vals


# ---------------------------------------------------------------- config plumbing

def _set(cfg, section, key, value):
    if value is not None:
        cfg.setdefault(section, {})[key] = value


def _problem_flags(cfg, args):
    for key in ("n", "V", "A", "p", "epsilon"):
        _set(cfg, "problem", key, getattr(args, key, None))
    prob = cfg.get("problem", {})
    # a flag for one of V/A replaces the other from the file
    if getattr(args, "A", None) is not None:
        prob.pop("V", None)
    if getattr(args, "V", None) is not None:
        prob.pop("A", None)


def build_config(args):
    """File config, then flags, validated as one document."""
    raw = {}
    if args.config:
        raw = C.load_config(args.config)
        raw.pop("results", None)
    raw["command"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.prefix is not None:
        _set(raw, "output", "prefix", args.prefix)
    hook = FLAG_HOOKS.get(args.command)
    if hook:
        hook(raw, args)
    C.validate(raw)
    cfg = C.merged(raw)
    C.validate(cfg)
    return cfg


def output_dir(cfg, args):
    d = args.outdir or os.environ.get(C.OUTPUT_ENV) or cfg["output"]["dir"]
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _out(cfg, outdir, name):
    return outdir / f"{cfg['output']['prefix']}{name}"


def _problem_A(cfg):
    return C.resolve_A(cfg["problem"])


def _problem_V(cfg):
    prob = cfg["problem"]
    return prob["V"] if "V" in prob else potential_from_dimension(prob["n"], prob["A"])


# ---------------------------------------------------------------- data

def make_profile(spec, compact=False):
    kind = spec["kind"]
    if kind == "bump":
        return bump(spec.get("radius", 1.0), spec.get("power", 4), spec.get("amplitude", 1.0))
    if kind == "zero":
        return bump(spec.get("radius", 1.0), 4, 0.0) if compact else None
    if compact:
        raise C.ConfigError(f"data kind {kind!r} has no compact support; semilinear runs need it",
                            path=("data",))
    if kind == "constant":
        return constant(spec.get("c", 1.0))
    return monomial(spec.get("k", 0), spec.get("c", 1.0))


def make_source(spec):
    if spec["kind"] == "zero":
        return None
    c = float(spec.get("c", 1.0))
    return SourceField.analytic(lambda s, rho: np.full(np.shape(s), c))


def polynomial_oracle(data, A):
    """Exact u(t, r) for polynomial data, or None."""
    parts = []
    for key in ("f", "g"):
        spec = data[key]
        kind = spec["kind"]
        if kind == "zero":
            continue
        if kind == "constant" or (kind == "monomial" and spec.get("k", 0) == 0):
            c = spec.get("c", 1.0)
            parts.append((lambda t, r, c=c: c + 0 * t) if key == "f" else (lambda t, r, c=c: c * t))
        elif kind == "monomial" and spec.get("k", 0) == 2:
            c = spec.get("c", 1.0)
            if key == "f":
                parts.append(lambda t, r, c=c: c * (r * r + A * t * t))
            else:
                parts.append(lambda t, r, c=c: c * (r * r * t + A * t ** 3 / 3.0))
        else:
            return None
    if data["F"]["kind"] == "constant":
        c = data["F"].get("c", 1.0)
        parts.append(lambda t, r, c=c: c * t * t / 2.0)
    return lambda t, r: sum((fn(t, r) for fn in parts), np.zeros(np.broadcast(t, r).shape))


def _quadrature(cfg):
    q = cfg["quadrature"]
    return QuadratureConfig(q["nodes_per_panel"], q["max_panels"], q["target_rel_tol"])


def _semilinear_problem(cfg, epsilon=None, T_max=None):
    from .semilinear import SemilinearProblem
    prob = cfg["problem"]
    params = ProblemParams(prob["n"], _problem_V(cfg), prob["p"],
                           prob["epsilon"] if epsilon is None else epsilon)
    return SemilinearProblem(params, make_profile(cfg["data"]["f"], True),
                             make_profile(cfg["data"]["g"], True),
                             T_max if T_max is not None else cfg["grid"]["t_max"],
                             cfg["grid"]["points_per_unit"])


# ---------------------------------------------------------------- commands

def cmd_exponents(cfg, args):
    prob = cfg["problem"]
    n, A = prob["n"], _problem_A(cfg)
    e = exponent_set(n, A)
    reg = classify_regime(n, A)
    plist = prob.get("p_list") or [prob["p"]]
    rows = []
    print(f"n = {n:g}  V = {_problem_V(cfg):.6g}  A = {A:.10g}  regime = {reg.tag.value}")
    for k, v in e.as_dict().items():
        print(f"  {k:<7s} {R.fmt(float(v)) if math.isinf(v) else f'{v:.10g}'}")
    print("  law rows:")
    for p in plist:
        law = lifespan_law(p, n, A)
        rows.append({"p": p, "law": law.describe(), "form": law.form.value, "branch": law.branch,
                     "theorem": law.theorem})
        print(f"    p = {p:<8g} {law.describe()}" + (f"  [{law.theorem} {law.branch}]" if law.branch else ""))
    result = {"n": n, "A": A, "V": _problem_V(cfg), "regime": reg.tag.value,
              "exponents": e.as_dict(), "laws": rows}
    if args.json:
        R.write_json(args.json, {**cfg, "results": result})
    return result


def cmd_regime_map(cfg, args):
    dg = cfg["diagram"]
    n = cfg["problem"]["n"]
    rm = R.regime_map(n, dg["axis"], dg["x_min"], dg["x_max"], dg["p_min"], dg["p_max"],
                      dg["resolution"], tuple(dg["curves"]))
    outdir = output_dir(cfg, args)
    files = {
        "curves_csv": R.regime_csv(rm, _out(cfg, outdir, "regime_curves.csv")),
        "regions_csv": R.regions_csv(rm, _out(cfg, outdir, "regime_regions.csv")),
        "svg": R.regime_svg(rm, _out(cfg, outdir, "regime_map.svg"), shade=dg["shade"]),
    }
    result = {"n": n, "axis": rm.axis, "samples": int(rm.x.size), "curves": list(rm.curves),
              "absent_curves": [c for c in dg["curves"] if c not in rm.curves],
              "borderline_A": rm.borderline_A, "intersections": rm.intersections,
              "degenerate": rm.degenerate, "files": {k: str(v) for k, v in files.items()}}
    R.write_json(_out(cfg, outdir, "regime_results.json"), {**cfg, "results": result})
    print(f"wrote {files['curves_csv']}, {files['regions_csv']}, {files['svg']}")
    if rm.intersections:
        for k, v in rm.intersections.items():
            print(f"  {k} cross at {rm.axis} = {v:.10g}")
    return result


def _solve_linear(cfg):
    A = _problem_A(cfg)
    g = cfg["grid"]
    t = np.linspace(0.0, g["t_max"], g["nt"] + 1)
    r = np.linspace(0.0, g["r_max"], g["nr"] + 1)
    data = cfg["data"]
    f, g, F = make_profile(data["f"]), make_profile(data["g"]), make_source(data["F"])
    u = solve_linear(A, t, r, f, g, F, _quadrature(cfg))
    res = {"mode": "linear", "A": A, "max_abs_u": float(np.max(np.abs(u.u)))}
    try:
        res["weak_residual"] = weak_residual(u, f=f, g=g, F=F, A=A)
    except ValueError as exc:
        res["weak_residual"] = None
        res["weak_residual_note"] = str(exc)
    oracle = polynomial_oracle(data, A)
    if oracle is not None:
        T, Rr = np.meshgrid(t, np.maximum(r, 1e-6), indexing="ij")
        ex = oracle(T, Rr)
        res["oracle_max_rel_error"] = float(np.max(np.abs(u.u - ex) / np.maximum(np.abs(ex), 1.0)))
    if t.size >= 3 and r.size >= 3:
        res["energy_start"] = energy(u, A, t[1])
        res["energy_end"] = energy(u, A, t[-2])
    return u, A, res


def _solve_semilinear(cfg):
    from .semilinear import iterate
    prob = _semilinear_problem(cfg)
    tol = cfg["tolerances"]
    out = iterate(prob, tol=tol["picard_tol"], max_iter=tol["max_iter"])
    u = out.field
    res = {"mode": "semilinear", "A": prob.A, "verdict": out.verdict.value, "reason": out.reason,
           "iterations": out.state.j, "max_abs_u": float(np.max(np.abs(u.u))),
           "weighted_sup": out.state.weighted_sup, "psi": prob.psi, "history": out.history}
    try:
        res["weak_residual"] = weak_residual(u, prob)
    except ValueError as exc:
        res["weak_residual"] = None
        res["weak_residual_note"] = str(exc)
    return u, prob.A, res


def original_variable(u, n, A):
    """U = r^((A-n)/2) u; at r = 0 this is 0, u or nan depending on the sign."""
    e = (A - n) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(u.r > 0, u.r ** e, 0.0 if e > 0 else 1.0 if e == 0 else np.nan)
    return u.u * w[None, :]


def cmd_solve(cfg, args):
    u, A, res = (_solve_semilinear if cfg["mode"] == "semilinear" else _solve_linear)(cfg)
    n = cfg["problem"]["n"]
    if not u.finite:
        raise NumericalFailure("solution contains non-finite values")
    U = original_variable(u, n, A)
    T, Rr = np.meshgrid(u.t, u.r, indexing="ij")
    W = decay_weight(T, Rr, A)
    res["weighted_decay_sup"] = float(np.max(W * np.abs(u.u)))
    outdir = output_dir(cfg, args)
    files = {"field_csv": R.field_csv(_out(cfg, outdir, "field.csv"), u, U, W),
             "field_svg": R.field_svg(_out(cfg, outdir, "field.svg"), u, f"{res['mode']} A = {A:.4g}")}
    res["files"] = {k: str(v) for k, v in files.items()}
    R.write_json(_out(cfg, outdir, "results.json"), {**cfg, "results": res})
    line = f"{res['mode']} solve: max|u| = {res['max_abs_u']:.6g}"
    if "verdict" in res:
        line += f", verdict {res['verdict']} after {res['iterations']} iterations"
    if "oracle_max_rel_error" in res:
        line += f", oracle error {res['oracle_max_rel_error']:.3g}"
    print(line)
    if res.get("verdict") == "diverged":
        raise NumericalFailure(f"Picard iteration diverged ({res['reason']})")
    return res


def fit_slope(eps, T):
    eps, T = np.asarray(eps, dtype=float), np.asarray(T, dtype=float)
    if eps.size < 2 or np.unique(eps).size < 2:
        return None
    return float(np.polyfit(np.log(eps), np.log(T), 1)[0])


def cmd_lifespan(cfg, args):
    from .semilinear import BudgetError, LifespanCriterion, estimate_lifespan
    ls = cfg["lifespan"]
    prob_cfg = cfg["problem"]
    n, p, A = prob_cfg["n"], prob_cfg["p"], _problem_A(cfg)
    law = lifespan_law(p, n, A)
    base = _semilinear_problem(cfg, epsilon=ls["epsilons"][0], T_max=ls["T_max"])
    rows = []
    for e in ls["epsilons"]:
        try:
            est = estimate_lifespan(base.with_epsilon(e), T_start=ls["T_start"],
                                    tol=cfg["tolerances"]["picard_tol"],
                                    max_iter=cfg["tolerances"]["max_iter"])
            row = {"epsilon": e, "T_num": est.T_num, "criterion": est.criterion.value,
                   "bracket": est.diagnostics.get("bracket"), "status": "ok"}
        except BudgetError as exc:
            row = {"epsilon": e, "T_num": None, "criterion": None, "bracket": None,
                   "status": f"budget exhausted: {exc}"}
        rows.append(row)
        print(f"  eps = {e:<8g} T_num = {row['T_num'] if row['T_num'] is not None else '-'}"
              f"  ({row['criterion'] or row['status']})")
    finite = [r for r in rows if r["T_num"] is not None
              and r["criterion"] != LifespanCriterion.T_MAX_REACHED.value]
    theory = law.exponent_of_epsilon if law.form is LawForm.POWER else None
    res = {"n": n, "A": A, "p": p, "law": law.describe(), "T_max": ls["T_max"],
           "points_per_unit": cfg["grid"]["points_per_unit"], "rows": rows,
           "theoretical_slope": theory}
    if not finite:
        res["message"] = "no finite lifespan detected up to T_max"
        print(res["message"])
    elif len(ls["epsilons"]) > 1:
        slope = fit_slope([r["epsilon"] for r in finite], [r["T_num"] for r in finite])
        res["slope"] = slope
        if slope is not None and theory:
            res["relative_deviation"] = abs(slope - theory) / abs(theory)
        print(f"fitted slope {slope if slope is not None else float('nan'):.4f}"
              + (f", law slope {theory:.4f}" if theory is not None else ""))
    outdir = output_dir(cfg, args)
    R.write_csv(_out(cfg, outdir, "lifespan.csv"), ["epsilon", "T_num", "criterion", "status"],
                [[r["epsilon"], r["T_num"] if r["T_num"] is not None else "", r["criterion"] or "",
                  r["status"]] for r in rows])
    if finite:
        R.lifespan_svg(_out(cfg, outdir, "lifespan.svg"), [r["epsilon"] for r in finite],
                       [r["T_num"] for r in finite], res.get("slope"), theory)
    R.write_json(_out(cfg, outdir, "lifespan_results.json"), {**cfg, "results": res})
    if any(r["status"] != "ok" for r in rows):
        raise NumericalFailure("grid budget exhausted for at least one epsilon")
    return res


def cmd_verify(cfg, args):
    from .verify import SUITES, run_suites
    if args.list:
        for name, (_, desc) in SUITES.items():
            print(f"{name:<10s} {desc}")
        return {"suites": list(SUITES)}
    names = args.suites or cfg["verify"]["suites"]
    try:
        rep = run_suites(names, seed=cfg["seed"])
    except KeyError as exc:
        raise C.ConfigError(exc.args[0]) from None
    for name, s in rep["suites"].items():
        print(f"{'PASS' if s['passed'] else 'FAIL'}  {name:<10s} {len(s['checks'])} checks"
              f"  {s['seconds']:.1f}s" + (f"  {s['error']}" if s["error"] else ""))
    if rep["first_failure"]:
        print(f"first failure: {rep['first_failure']}")
    if args.json:
        R.write_json(args.json, rep)
    else:
        print(json.dumps(R._jsonable({"passed": rep["passed"], "first_failure": rep["first_failure"],
                                      "suites": {k: v["passed"] for k, v in rep["suites"].items()}})))
    if not rep["passed"]:
        raise NumericalFailure(f"verification failed: {rep['first_failure']}")
    return rep


# ---------------------------------------------------------------- flag hooks

def _hook_exponents(cfg, a):
    _problem_flags(cfg, a)
    if a.p is not None:
        cfg["problem"]["p_list"] = a.p_list
        cfg["problem"]["p"] = a.p_list[0]


def _hook_regime(cfg, a):
    _set(cfg, "problem", "n", a.n)
    _set(cfg, "diagram", "axis", a.axis)
    if a.x_range:
        _set(cfg, "diagram", "x_min", a.x_range[0])
        _set(cfg, "diagram", "x_max", a.x_range[1])
    if a.p_range:
        _set(cfg, "diagram", "p_min", a.p_range[0])
        _set(cfg, "diagram", "p_max", a.p_range[1])
    _set(cfg, "diagram", "resolution", a.resolution)
    if a.curves:
        _set(cfg, "diagram", "curves", [c.strip() for c in a.curves.split(",") if c.strip()])
    if a.no_shade:
        _set(cfg, "diagram", "shade", False)


def _grid_flags(cfg, a):
    _set(cfg, "grid", "t_max", a.t_max)
    _set(cfg, "grid", "points_per_unit", a.ppu)
    _set(cfg, "tolerances", "picard_tol", a.tol)
    _set(cfg, "tolerances", "max_iter", a.max_iter)
    if a.amplitude is not None:
        for key in ("f", "g"):
            spec = dict(cfg.get("data", {}).get(key, C.DEFAULTS["data"][key]))
            if spec["kind"] == "bump":
                spec["amplitude"] = a.amplitude
            cfg.setdefault("data", {})[key] = spec


def _hook_solve(cfg, a):
    _problem_flags(cfg, a)
    if a.mode:
        cfg["mode"] = a.mode
    _grid_flags(cfg, a)
    _set(cfg, "grid", "r_max", a.r_max)
    _set(cfg, "grid", "nt", a.nt)
    _set(cfg, "grid", "nr", a.nr)


def _hook_lifespan(cfg, a):
    _problem_flags(cfg, a)
    _grid_flags(cfg, a)
    _set(cfg, "lifespan", "epsilons", a.epsilons)
    _set(cfg, "lifespan", "T_max", a.T_max)
    _set(cfg, "lifespan", "T_start", a.T_start)


def _hook_verify(cfg, a):
    if a.suites:
        _set(cfg, "verify", "suites", a.suites)


FLAG_HOOKS = {"exponents": _hook_exponents, "regime-map": _hook_regime, "solve": _hook_solve,
              "lifespan": _hook_lifespan, "verify": _hook_verify}
COMMANDS = {"exponents": cmd_exponents, "regime-map": cmd_regime_map, "solve": cmd_solve,
            "lifespan": cmd_lifespan, "verify": cmd_verify}


# ---------------------------------------------------------------- parser

def _common(sp):
    sp.add_argument("--config", help="JSON config file (results files are accepted too)")
    sp.add_argument("--outdir", help=f"output directory (overrides ${C.OUTPUT_ENV} and the config)")
    sp.add_argument("--prefix", help="file name prefix for outputs")
    sp.add_argument("--seed", type=int, help=f"random seed (default {C.DEFAULT_SEED})")


def _problem_args(sp, with_p=True):
    sp.add_argument("--n", type=float, help="space dimension")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--V", type=float, help="inverse-square potential strength")
    g.add_argument("--A", type=float, help="effective dimension (instead of --V)")
    if with_p:
        sp.add_argument("--p", type=float, help="power of the nonlinearity")


def _numeric_args(sp):
    sp.add_argument("--t-max", type=float, dest="t_max", help="time horizon")
    sp.add_argument("--ppu", type=int, help="grid points per unit length (semilinear)")
    sp.add_argument("--tol", type=float, help="Picard tolerance")
    sp.add_argument("--max-iter", type=int, dest="max_iter", help="Picard iteration cap")
    sp.add_argument("--amplitude", type=float, help="amplitude of bump data")


def build_parser():
    ap = argparse.ArgumentParser(prog="fracwave", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="exit codes: 0 success, 1 invalid input, 2 numerical failure")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("exponents", help="critical exponents, regime and lifespan laws")
    _common(sp)
    _problem_args(sp, with_p=False)
    sp.add_argument("--p", type=_floats, dest="p_list", help="comma-separated powers")
    sp.add_argument("--json", help="also write the table as JSON here")

    sp = sub.add_parser("regime-map", help="exponent curves and regions as CSV + SVG")
    _common(sp)
    sp.add_argument("--n", type=float, help="space dimension")
    sp.add_argument("--axis", choices=["A", "V"], help="horizontal axis")
    sp.add_argument("--x-range", type=_pair, dest="x_range", help="lo,hi of the horizontal axis")
    sp.add_argument("--p-range", type=_pair, dest="p_range", help="lo,hi of p")
    sp.add_argument("--resolution", type=int, help="samples per axis")
    sp.add_argument("--curves", help=f"subset of {','.join(C.CURVES)}")
    sp.add_argument("--no-shade", action="store_true", dest="no_shade", help="curves only")

    sp = sub.add_parser("solve", help="linear or semilinear solve on a grid")
    _common(sp)
    _problem_args(sp)
    sp.add_argument("--epsilon", type=float, help="data size (semilinear)")
    sp.add_argument("--mode", choices=["linear", "semilinear"])
    _numeric_args(sp)
    sp.add_argument("--r-max", type=float, dest="r_max", help="largest radius (linear)")
    sp.add_argument("--nt", type=int, help="time steps (linear)")
    sp.add_argument("--nr", type=int, help="radial steps (linear)")

    sp = sub.add_parser("lifespan", help="numerical lifespan over an epsilon sweep")
    _common(sp)
    _problem_args(sp)
    sp.add_argument("--epsilons", type=_floats, help="comma-separated data sizes")
    sp.add_argument("--T-max", type=float, dest="T_max", help="largest horizon to try")
    sp.add_argument("--T-start", type=float, dest="T_start", help="first horizon")
    _numeric_args(sp)

    sp = sub.add_parser("verify", help="run self-check suites")
    _common(sp)
    sp.add_argument("suites", nargs="*", help="suite names or 'all'")
    sp.add_argument("--list", action="store_true", help="list suites and exit")
    sp.add_argument("--json", help="write the full report here")
    return ap


def _patch_exponent_args(args):
    if args.command == "exponents":
        args.p = args.p_list[0] if args.p_list else None
    return args


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _patch_exponent_args(args)
    try:
        cfg = build_config(args)
        COMMANDS[args.command](cfg, args)
    except (C.ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, QuadratureError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as exc:  # BudgetError and friends
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
