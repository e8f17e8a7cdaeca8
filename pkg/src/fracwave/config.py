"""Run configuration: JSON schema, loading and validation.

A config is one JSON object.  Sections that a command does not use are
ignored, unknown keys are rejected everywhere.  Emitted results files are
configs with an extra ``results`` section, so they can be fed back in.
"""

from __future__ import annotations

import copy
import json
import math
import re

import jsonschema

from .exponents import ParameterError, dimension_shift, hardy_threshold

OUTPUT_ENV = "FRACWAVE_OUTPUT_DIR"
DEFAULT_SEED = 20240
CURVES = ("p_S", "p_F", "p_d", "p_m", "p_M", "p_t", "p_conf")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_profile = _obj({
    "kind": {"enum": ["bump", "constant", "monomial", "zero"]},
    "radius": _pos,
    "power": {"type": "integer", "minimum": 2},
    "amplitude": _num,
    "k": {"type": "integer", "minimum": 0},
    "c": _num,
}, required=["kind"])

_source = _obj({
    "kind": {"enum": ["zero", "constant"]},
    "c": _num,
}, required=["kind"])

SCHEMA = _obj({
    "command": {"enum": ["exponents", "regime-map", "solve", "lifespan", "verify"]},
    "seed": {"type": "integer", "minimum": 0},
    "mode": {"enum": ["linear", "semilinear"]},
    "problem": _obj({
        "n": {"type": "number", "minimum": 2},
        "V": _num,
        "A": _num,
        "p": _num,
        "p_list": {"type": "array", "items": _num},
        "epsilon": {"type": "number", "minimum": 0},
    }),
    "data": _obj({"f": _profile, "g": _profile, "F": _source}),
    "grid": _obj({
        "t_max": _pos,
        "r_max": _pos,
        "nt": _posint,
        "nr": _posint,
        "points_per_unit": {"type": "integer", "minimum": 2},
    }),
    "quadrature": _obj({
        "nodes_per_panel": {"type": "integer", "minimum": 2},
        "max_panels": _posint,
        "target_rel_tol": _pos,
    }),
    "tolerances": _obj({
        "picard_tol": _pos,
        "max_iter": _posint,
    }),
    "lifespan": _obj({
        "epsilons": {"type": "array", "items": _pos, "minItems": 1},
        "T_start": _pos,
        "T_max": _pos,
    }),
    "diagram": _obj({
        "axis": {"enum": ["A", "V"]},
        "x_min": _num,
        "x_max": _num,
        "p_min": _num,
        "p_max": _num,
        "resolution": {"type": "integer", "minimum": 2},
        "curves": {"type": "array", "items": {"enum": list(CURVES)}, "uniqueItems": True},
        "shade": {"type": "boolean"},
    }),
    "verify": _obj({"suites": {"type": "array", "items": {"type": "string"}}}),
    "output": _obj({"dir": {"type": "string"}, "prefix": {"type": "string"}}),
    "results": {"type": "object"},
})

DEFAULTS = {
    "seed": DEFAULT_SEED,
    "mode": "linear",
    "problem": {"n": 3, "V": 0.0, "p": 2.0, "epsilon": 0.1},
    "data": {"f": {"kind": "bump"}, "g": {"kind": "bump"}, "F": {"kind": "zero"}},
    "grid": {"t_max": 4.0, "r_max": 4.0, "nt": 16, "nr": 32, "points_per_unit": 16},
    "quadrature": {"nodes_per_panel": 8, "max_panels": 64, "target_rel_tol": 1e-9},
    "tolerances": {"picard_tol": 1e-8, "max_iter": 60},
    "lifespan": {"epsilons": [0.4, 0.2, 0.1, 0.05], "T_start": 2.0, "T_max": 256.0},
    "diagram": {"axis": "A", "x_min": 2.0, "x_max": 3.0, "p_min": 1.0, "p_max": 4.0,
                "resolution": 201, "curves": list(CURVES), "shade": True},
    "verify": {"suites": ["all"]},
    "output": {"dir": "fracwave_out", "prefix": ""},
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source text when known."""

    def __init__(self, message, line=None, path=()):
        self.line = line
        self.path = tuple(path)
        where = f"line {line}: " if line else ""
        loc = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}{loc + ': ' if loc else ''}{message}")


def locate(text, path):
    """1-based line of the key at ``path`` in raw JSON ``text`` (best effort)."""
    if not text:
        return None
    pos = 0
    found = None
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if m is None:
            break
        pos = m.start()
        found = pos
    if found is None:
        return 1
    return text.count("\n", 0, found) + 1


def merged(cfg):
    """Defaults overlaid with ``cfg`` (one level deep per section)."""
    out = copy.deepcopy(DEFAULTS)
    for key, val in cfg.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in ("problem", "data"):
            out[key] = {**out[key], **copy.deepcopy(val)}
        else:
            out[key] = copy.deepcopy(val)
    if "problem" in cfg:
        prob = {**DEFAULTS["problem"], **cfg["problem"]}
        if "A" in cfg["problem"] and "V" not in cfg["problem"]:
            prob.pop("V")
        out["problem"] = prob
    if "data" in cfg:
        out["data"] = {**DEFAULTS["data"], **copy.deepcopy(cfg["data"])}
    return out


def check_physics(cfg, text=None):
    """Constraints that a JSON schema cannot express."""
    def fail(msg, *path):
        raise ConfigError(msg, locate(text, path), path)

    prob = cfg.get("problem", {})
    n = prob.get("n", DEFAULTS["problem"]["n"])
    if "V" in prob and "A" in prob:
        fail("give V or A, not both", "problem", "A")
    if "V" in prob and prob["V"] < hardy_threshold(n):
        fail(f"V={prob['V']} is below the Hardy threshold {hardy_threshold(n):.6g} for n={n}",
             "problem", "V")
    if "A" in prob and prob["A"] < 2:
        fail(f"A={prob['A']} must be >= 2", "problem", "A")
    if "p" in prob and not prob["p"] > 1:
        fail(f"p={prob['p']} must be > 1", "problem", "p")
    for i, p in enumerate(prob.get("p_list", [])):
        if not p > 1:
            fail(f"p={p} must be > 1", "problem", "p_list", i)
    dg = cfg.get("diagram", {})
    for lo, hi in (("x_min", "x_max"), ("p_min", "p_max")):
        if lo in dg and hi in dg:
            if not (math.isfinite(dg[lo]) and math.isfinite(dg[hi])) or dg[lo] > dg[hi]:
                fail(f"{lo} <= {hi} required", "diagram", lo)
    if dg.get("p_min", 2.0) <= 1 and dg.get("p_max", 2.0) <= 1:
        fail("p range must reach above 1", "diagram", "p_max")
    if dg.get("axis") == "V" and "x_min" in dg and dg["x_min"] < hardy_threshold(n):
        fail(f"V range starts below the Hardy threshold {hardy_threshold(n):.6g}", "diagram", "x_min")
    if dg.get("axis", "A") == "A" and "x_min" in dg and dg["x_min"] < 2:
        fail("A range must stay >= 2", "diagram", "x_min")
    for i, e in enumerate(cfg.get("lifespan", {}).get("epsilons", [])):
        if not e < 1:
            fail(f"epsilon={e} must be < 1", "lifespan", "epsilons", i)


def validate(cfg, text=None):
    """Schema plus physical checks; raises :class:`ConfigError`."""
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        path = list(e.absolute_path)
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            if extra:
                path = path + [extra[0]]
        raise ConfigError(e.message, locate(text, path), path)
    check_physics(cfg, text)
    return cfg


def load_config(path):
    """Read and validate a JSON config file (results files are accepted)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text)


def parse_config(text):
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno) from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", 1)
    return validate(cfg, text)


def resolve_A(prob):
    """Effective dimension from a problem section with V or A."""
    if "A" in prob:
        return float(prob["A"])
    try:
        return dimension_shift(prob["n"], prob.get("V", 0.0))
    except ParameterError as exc:
        raise ConfigError(str(exc), path=("problem", "V")) from None
