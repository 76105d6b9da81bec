import json

import numpy as np
import pytest

from sprayforge import tangent as tg
from sprayforge.errors import ConfigError, UnboundParameter
from sprayforge.scenarios import (NEGATIVE_CONTROLS, SCHEMA, build, config_from_dict, load_config,
                                  load_preset, preset_names)

EXPECTED = ["euclid-flat", "polar-plane", "electrodynamics", "randers", "kropina", "ingarden",
            "harmonic-oscillator", "damped-liouville", "lorentz-force", "finsler-beta-force",
            "hamilton-electrodynamics", "cartan-flat", "cartan-randers-dual", "prolonged-riemann-k2",
            "higher-order-friction-k2"]


def test_registry_is_complete():
    assert preset_names() == EXPECTED
    assert "corrupted-gl" in preset_names(include_controls=True)
    assert "corrupted-gl" in NEGATIVE_CONTROLS


@pytest.mark.parametrize("name", EXPECTED)
def test_preset_builds_and_field_is_finite(name):
    sc = build(load_preset(name))
    assert sc.config.name == name
    state = np.array(sc.config.initial)
    assert state.shape == (sc.config.layout.size,)
    assert np.all(np.isfinite(sc.field(state)))


def test_user_config_param_metric(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema": SCHEMA, "kind": "lagrange", "n": 2,
                                "lagrangian": "y1^2 + q*y2^2", "params": {"q": 3}}))
    sc = build(load_config(str(path)))
    assert np.array_equal(tg.fundamental_tensor(sc.space, [0, 0, 1, 1]).g, np.diag([1.0, 3.0]))


def test_unbound_parameter_named():
    with pytest.raises(UnboundParameter) as info:
        config_from_dict({"kind": "lagrange", "n": 2, "lagrangian": "y1^2 + omega*y2^2"})
    assert info.value.name == "omega"


def test_preset_override(tmp_path):
    path = tmp_path / "o.json"
    path.write_text(json.dumps({"preset": "damped-liouville", "params": {"omega": 2.0}}))
    cfg = load_config(str(path))
    assert cfg.params["omega"] == 2.0 and cfg.kind == "riemannian"


@pytest.mark.parametrize("doc", [
    {"kind": "bogus", "n": 2},
    {"kind": "lagrange", "n": 0, "lagrangian": "y1^2"},
    {"kind": "lagrange", "n": 2, "lagrangian": "y1^2 +"},
    {"kind": "lagrange", "n": 2, "lagrangian": "y1^2", "colour": "red"},
    {"kind": "lagrange", "n": 2, "lagrangian": "y1^2", "schema": "other/9"},
    {"kind": "riemannian", "n": 2, "metric": [["1", "0"]]},
    {"kind": "lagrange", "n": 2, "k": 2, "lagrangian": "y1^2"},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/sprayforge.json")


def test_sample_points_respect_box():
    sc = build(load_preset("randers"))
    pts = sc.sample_points(np.random.default_rng(0), 50)
    ys = np.array([p[2:] for p in pts])
    assert ys.min() >= 0.2 and ys.max() <= 1.0
