"""Scenario runner: config validation, report structure, exit codes."""
import json
import math

import pytest

from geodlab.cli import ConfigError, emit_report, load_config, main, run_scenario


def light_config(**over):
    cfg = {
        "preset": "schottky_pair",
        "analyses": ["exponent"],
        "truncation": {"max_dist": 10.0, "max_words": 10},
    }
    cfg.update(over)
    return cfg


def test_load_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        load_config(light_config(bogus=1))
    with pytest.raises(ConfigError):
        load_config(light_config(truncation={"max_depth": 3}))
    with pytest.raises(ConfigError):
        load_config(light_config(analyses=["nonsense"]))
    with pytest.raises(ConfigError):
        load_config(light_config(preset="other_group"))


def test_load_config_fills_preset_analyses():
    cfg = load_config({"preset": "modular_group"})
    assert cfg["analyses"]  # preset default list, never empty


def test_run_scenario_exponent_only():
    rep = run_scenario(light_config())
    assert rep["ok"] is True
    assert rep["enumeration"]["elements"] > 10
    assert rep["enumeration"]["schottky_ok"] is True
    est = rep["analyses"]["exponent"]
    assert 0.1 < est["value"] < 0.9
    assert est["sentinel"] is False


def test_run_scenario_with_potential_and_infinity():
    cfg = light_config(
        potential={"terms": [{"type": "bump", "center": [0.0, 1.0],
                              "height": 0.5, "radius": 1.0}]},
        analyses=["exponent", "infinity"],
        truncation={"max_dist": 16.0, "max_words": 16},
        params={"R_grid": [1.0, 2.0, 3.0]},
    )
    rep = run_scenario(cfg)
    assert not rep["errors"]
    inf_block = rep["analyses"]["infinity"]
    assert len(inf_block["per_R"]) == 3


def test_run_scenario_records_analysis_errors():
    # a census cannot fit 5 bins in a tiny ball: error recorded, not raised
    cfg = light_config(analyses=["gurevic"],
                       truncation={"max_dist": 6.0, "max_words": 6})
    rep = run_scenario(cfg)
    assert rep["errors"] and rep["ok"] is False


def test_emit_report_files(tmp_path):
    rep = run_scenario(light_config())
    paths = emit_report(rep, str(tmp_path / "out"), fmt="csv")
    assert any(p.endswith("report.json") for p in paths)
    assert any(p.endswith("checks.csv") for p in paths)
    with open(paths[0]) as fh:
        loaded = json.load(fh)
    assert loaded["ok"] is True


def test_main_exit_codes(tmp_path):
    out = str(tmp_path / "run")
    code = main(["--preset", "schottky_pair", "--analysis", "exponent",
                 "--max-dist", "10", "--out", out])
    assert code == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--config", str(bad)]) == 2
