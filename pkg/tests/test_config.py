import json
import math
from pathlib import Path

import pytest

from trimode.harness.config import (
    ConfigError,
    RunConfig,
    SweepSpec,
    load_config,
    parse_config,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_minimal_config_echoes_defaults():
    cfg = parse_config('{"params": {"omega_a": 1, "omega_b": 1.5}}')
    assert isinstance(cfg, RunConfig)
    echo = cfg.echo()
    assert echo["params"] == {
        "omega_a": 1.0, "omega_b": 1.5, "lambda_a": 0.0, "lambda_b": 0.0, "g_a": 0.0, "g_b": 0.0
    }
    assert echo["squeeze"] == {"r": [0.0, 0.0, 0.0], "theta": [0.0, 0.0, 0.0]}
    assert echo["time"] == {"t_max": None, "n_samples": "auto"}
    assert echo["dfs"] == {"delta_t_factor": 1e-3, "scan": None}
    assert echo["average_window_periods"] == 50
    assert echo["measured_mode"] == "C"
    json.dumps(echo)


def test_scientific_notation_accepted():
    cfg = parse_config('{"params": {"omega_a": 1e0, "omega_b": 2.5E-1, "g_a": 1e-3}}')
    assert cfg.params.omega_b == 0.25


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError, match=r"squeeze\.phase"):
        parse_config('{"params": {"omega_a": 1, "omega_b": 1}, "squeeze": {"phase": 1}}')
    with pytest.raises(ConfigError, match=r"(?m)^  foo: Extra inputs"):
        parse_config('{"params": {"omega_a": 1, "omega_b": 1}, "foo": 1}')


def test_malformed_json_reports_location():
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config('{"params":\n  {"omega_a": 1,, "omega_b": 1}}')


def test_non_object_rejected():
    with pytest.raises(ConfigError, match="JSON object"):
        parse_config("[1, 2]")


@pytest.mark.parametrize(
    "doc, path",
    [
        ('{"params": {"omega_a": 1}}', "params.omega_b"),
        ('{"params": {"omega_a": 1, "omega_b": 1}, "time": {"n_samples": 1}}', "time.n_samples"),
        ('{"params": {"omega_a": 1, "omega_b": 1}, "time": {"t_max": -2}}', "time.t_max"),
        ('{"params": {"omega_a": 1, "omega_b": 1}, "squeeze": {"r": [0, -1, 0]}}', "squeeze.r"),
        ('{"params": {"omega_a": 1, "omega_b": 1}, "average_window_periods": 3}', "average_window_periods"),
        ('{"params": {"omega_a": 1, "omega_b": 1}, "measured_mode": "B"}', "measured_mode"),
    ],
)
def test_invalid_fields_named(doc, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config(doc)


def test_stability_violation_reports_margin():
    # g_a = 3 with omega = lambda = 1: margin 1 - 9 = -8
    doc = {"params": {"omega_a": 1, "omega_b": 1, "lambda_a": 1, "lambda_b": 1, "g_a": 3}}
    with pytest.raises(ConfigError, match=r"margin -8\b"):
        parse_config(json.dumps(doc))


def test_parameter_domain_error_named():
    with pytest.raises(ConfigError, match="^params:"):
        parse_config('{"params": {"omega_a": 1, "omega_b": 1, "lambda_a": 1.5}}')


def test_heavy_mediator_sweep_config():
    spec = load_config(str(CONFIGS / "sweep_heavy_mediator.json"))
    assert isinstance(spec, SweepSpec)
    p = spec.params
    assert (p.omega_b, p.lambda_b, p.lambda_a, p.g_b) == (5.0, 4.9, 1e-4, 1.0)
    assert (spec.sweep.axis1.param, spec.sweep.axis2.param) == ("omega_a", "g_a")
    assert spec.squeeze.theta[0] == pytest.approx(2 * math.pi - math.pi / 3)


def test_links_applied_after_axes():
    spec = load_config(str(CONFIGS / "sweep_light_mediator.json"))
    values = spec.point_params(3.0, 0.5)
    assert values["omega_b"] == 3.0 and values["g_a"] == 0.5
    assert values["lambda_b"] == pytest.approx(2.0)


@pytest.mark.parametrize(
    "sweep, message",
    [
        ({"axis1": {"param": "g_a", "min": 0, "max": 1, "n_points": 2},
          "axis2": {"param": "g_a", "min": 0, "max": 1, "n_points": 2}}, "distinct"),
        ({"axis1": {"param": "g_a", "min": 0, "max": 1, "n_points": 1},
          "axis2": {"param": "g_b", "min": 0, "max": 1, "n_points": 2}}, "n_points"),
        ({"axis1": {"param": "g_a", "min": 0, "max": 1, "n_points": 2, "scale": "log"},
          "axis2": {"param": "g_b", "min": 0, "max": 1, "n_points": 2}}, "log axis"),
        ({"axis1": {"param": "g_a", "min": 0, "max": 1, "n_points": 2},
          "axis2": {"param": "g_b", "min": 0, "max": 1, "n_points": 2},
          "quantities": ["purity"]}, "quantities"),
        ({"axis1": {"param": "g_a", "min": 0, "max": 1, "n_points": 2},
          "axis2": {"param": "g_b", "min": 0, "max": 1, "n_points": 2},
          "links": [{"param": "g_a", "source": "omega_a", "factor": 1}]}, "already a sweep axis"),
    ],
)
def test_sweep_constraints(sweep, message):
    doc = {"params": {"omega_a": 1, "omega_b": 1}, "sweep": sweep}
    with pytest.raises(ConfigError, match=message):
        parse_config(json.dumps(doc))


def test_sweep_base_point_may_violate_stability():
    # grid points are checked individually, so the base set need not be stable
    doc = {
        "params": {"omega_a": 1, "omega_b": 1, "g_a": 3},
        "sweep": {"axis1": {"param": "omega_a", "min": 1, "max": 2, "n_points": 2},
                  "axis2": {"param": "g_b", "min": 0, "max": 1, "n_points": 2}},
    }
    assert isinstance(parse_config(json.dumps(doc)), SweepSpec)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/config.json")
