import json

import pytest

from fracwave.config import (DEFAULTS, ConfigError, load_config, locate, merged, parse_config,
                             resolve_A, validate)


def test_defaults_validate():
    validate(DEFAULTS)


def test_unknown_key_reports_line():
    text = '{\n  "problem": {\n    "n": 3,\n    "colour": 1\n  }\n}\n'
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.line == 4
    assert "colour" in str(ei.value)


def test_bad_type_reports_line():
    text = '{\n  "grid": {\n    "nt": "many"\n  }\n}'
    with pytest.raises(ConfigError) as ei:
        parse_config(text)
    assert ei.value.line == 3 and ei.value.path == ("grid", "nt")


def test_json_syntax_error_reports_line():
    with pytest.raises(ConfigError) as ei:
        parse_config('{\n  "seed": 1,\n  oops\n}')
    assert ei.value.line == 3


def test_non_object_rejected():
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


@pytest.mark.parametrize("cfg,path", [
    ({"problem": {"n": 3, "V": -0.3}}, ("problem", "V")),
    ({"problem": {"n": 3, "V": 0.0, "A": 3.0}}, ("problem", "A")),
    ({"problem": {"A": 1.5}}, ("problem", "A")),
    ({"problem": {"p": 1.0}}, ("problem", "p")),
    ({"problem": {"p_list": [2.0, 0.5]}}, ("problem", "p_list", 1)),
    ({"diagram": {"x_min": 3.0, "x_max": 2.0}}, ("diagram", "x_min")),
    ({"diagram": {"axis": "V", "x_min": -5.0, "x_max": 1.0}}, ("diagram", "x_min")),
    ({"diagram": {"axis": "A", "x_min": 1.5, "x_max": 3.0}}, ("diagram", "x_min")),
    ({"lifespan": {"epsilons": [0.1, 1.5]}}, ("lifespan", "epsilons", 1)),
])
def test_physics_checks(cfg, path):
    with pytest.raises(ConfigError) as ei:
        validate(cfg)
    assert ei.value.path == path


def test_merged_drops_default_V_when_A_given():
    cfg = merged({"problem": {"A": 2.5}})
    assert "V" not in cfg["problem"] and cfg["problem"]["n"] == 3
    assert resolve_A(cfg["problem"]) == 2.5
    assert resolve_A(merged({})["problem"]) == 3.0
    assert merged({"grid": {"nt": 4}})["grid"]["nr"] == DEFAULTS["grid"]["nr"]


def test_results_section_accepted(tmp_path):
    p = tmp_path / "r.json"
    p.write_text(json.dumps({**DEFAULTS, "results": {"anything": [1, 2]}}))
    assert load_config(p)["results"] == {"anything": [1, 2]}


def test_locate():
    text = '{\n "a": {\n  "b": 1\n }\n}'
    assert locate(text, ("a", "b")) == 3
    assert locate(None, ("a",)) is None
