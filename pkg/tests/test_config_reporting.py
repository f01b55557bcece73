import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from decaylab import (
    ConfigError,
    PotentialSpec,
    assemble_hamiltonian,
    compare_runs,
    config_hash,
    dump_operator,
    load_config,
    load_operator,
    make_grid,
    scenario_config,
    list_scenarios,
    bundled_scenarios,
    validate_config,
)
from decaylab.reporting import load_report


def minimal_raw(**over):
    raw = {
        "scenario": "tiny",
        "seed": 7,
        "checks": ["P41"],
        "grid": {"geometry": "line1d", "n": 32, "length": 6.0},
        "potential": {"family": "critical", "coupling": 1.0, "n_space": 1},
        "commutator": {"c": 2.0, "s": 0.5},
        "band": {"lo": 0.05, "hi": 20.0},
        "drift": {"truncation_time": 4.0},
    }
    raw.update(over)
    return raw


def test_validate_minimal_config():
    cfg = validate_config(minimal_raw())
    assert cfg.scenario == "tiny"
    assert cfg.checks == ["P41"]
    assert cfg.plan["kernel"] == "eigenbasis"


def test_unknown_top_level_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        validate_config(minimal_raw(tolerance_profile=1.0))


def test_unknown_nested_key_rejected():
    raw = minimal_raw()
    raw["drift"]["trunc_time"] = 4.0
    with pytest.raises(ConfigError, match=r"drift\.trunc_time"):
        validate_config(raw)


def test_seed_mandatory_and_integer():
    raw = minimal_raw()
    del raw["seed"]
    with pytest.raises(ConfigError, match="seed"):
        validate_config(raw)
    with pytest.raises(ConfigError, match="seed"):
        validate_config(minimal_raw(seed=1.5))


def test_unknown_check_id_rejected():
    with pytest.raises(ConfigError, match="unknown check id"):
        validate_config(minimal_raw(checks=["P40"]))


def test_small_grid_rejected_for_scenarios():
    raw = minimal_raw()
    raw["grid"]["n"] = 4
    with pytest.raises(ConfigError, match="n >= 8"):
        validate_config(raw)


def test_schema_version_pinned():
    with pytest.raises(ConfigError, match="schema_version"):
        validate_config(minimal_raw(schema_version=99))


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(minimal_raw()))
    cfg = load_config(str(path))
    assert config_hash(cfg) == config_hash(validate_config(minimal_raw()))


def test_config_hash_sensitivity():
    a = config_hash(validate_config(minimal_raw()))
    b = config_hash(validate_config(minimal_raw(seed=8)))
    assert a != b


def test_bundled_scenarios_present():
    names = bundled_scenarios()
    for required in ("free-1d-p53", "free-1d-p63", "critical-3d-p71",
                     "exact-algebra-p41", "exact-algebra-p42", "kato-morawetz"):
        assert required in names
    for name in names:
        scenario_config(name)  # validates


def test_list_scenarios_filtering():
    assert list_scenarios("free") and all("free" in r["name"] for r in list_scenarios("free"))
    assert list_scenarios("zzz") == []


def test_operator_dump_round_trip(tmp_path):
    g = make_grid("line1d", 12, 3.0)
    hop = assemble_hamiltonian(g, PotentialSpec("critical", 1.0, 1))
    path = tmp_path / "h.csv"
    dump_operator(path, hop)
    header = path.read_text().splitlines()[0]
    assert header.startswith("# decaylab-operator dim=12 role=hamiltonian grid=")
    back, grid_hash = load_operator(path)
    assert grid_hash == g.digest()
    np.testing.assert_allclose(back.mat, hop.mat, atol=1e-15)


def test_compare_runs_identical_and_flip():
    a = {"schema_version": 1, "verdicts": {"P41": "PASS"}, "checks": {"P41": {"x": 1.0}}}
    b = json.loads(json.dumps(a))
    diff = compare_runs(a, b)
    assert diff["identical"]
    b["verdicts"]["P41"] = "FAIL"
    diff = compare_runs(a, b)
    assert diff["verdict_flips"] == [{"check": "P41", "a": "PASS", "b": "FAIL"}]


def test_compare_runs_threshold():
    a = {"schema_version": 1, "verdicts": {}, "checks": {"c": {"x": 1.0}}}
    b = {"schema_version": 1, "verdicts": {}, "checks": {"c": {"x": 1.0 + 1e-13}}}
    assert compare_runs(a, b)["identical"]
    c = {"schema_version": 1, "verdicts": {}, "checks": {"c": {"x": 1.0 + 1e-6}}}
    assert not compare_runs(a, c)["identical"]


def test_compare_runs_schema_mismatch():
    with pytest.raises(ValueError, match="schema version"):
        compare_runs({"schema_version": 1}, {"schema_version": 2})
