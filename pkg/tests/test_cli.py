import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

from nads.cli import main
from nads.config import build_config, bundled_systems, load_config, load_system, system_from_json
from nads.errors import ConfigError
from nads.pipelines import dumps, run

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SCHEMA_DIR = ROOT / "src" / "nads" / "schemas"

# bundled config -> expected exit code (mirrors the README table)
EXIT_TABLE = {
    "doubling-banks": 0,
    "doubling-collective": 0,
    "doubling-devaney": 0,
    "doubling-iterate": 0,
    "doubling-periodic": 0,
    "doubling-sensitivity": 0,
    "doubling-synchronous": 0,
    "doubling-transitivity": 0,
    "f-system-banks": 2,
    "f-system-orbit": 0,
    "f-system-periodic": 0,
    "g-system-orbit-escape": 1,
    "g-system-periodic": 0,
    "identity-banks": 2,
    "identity-sensitivity": 2,
    "scaled-tent-iterate": 0,
    "shift8-linear-collective": 0,
    "shift8-linear-synchronous": 0,
}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_every_bundled_config_is_tabulated():
    assert sorted(p.stem for p in CONFIGS.glob("*.json")) == sorted(EXIT_TABLE)


@pytest.mark.parametrize("name", sorted(EXIT_TABLE))
def test_exit_code_contract(tmp_path, name):
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    code = main([cfg["analysis"], "--config", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path)])
    assert code == EXIT_TABLE[name]
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["exit_code"] == code
    Draft202012Validator(json.loads((SCHEMA_DIR / "report.schema.json").read_text())).validate(report)


def test_minimal_config_defaults(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "system": "bundled:doubling", "analysis": "sensitivity", "rng_seed": 1})
    cfg = load_config(p)
    assert cfg.parameters["horizon"] == 64 and "horizon" in cfg.defaults


def test_missing_seed(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "system": "bundled:doubling", "analysis": "sensitivity"})
    with pytest.raises(ConfigError, match="^rng_seed required$"):
        load_config(p)
    assert load_config(p, seed=3).rng_seed == 3
    assert main(["sensitivity", "--config", str(p), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize("params, field", [
    ({"eps_ladder": [-0.1]}, "parameters.eps_ladder[0]"),
    ({"horizon": 0}, "parameters.horizon"),
    ({"resolution": -1.0}, "parameters.resolution"),
    ({"eps_ladder": [1e-3, 1e-2]}, "parameters.eps_ladder"),
    ({"bogus": 1}, "parameters"),
])
def test_invalid_parameters_name_the_field(tmp_path, params, field):
    p = _write(tmp_path, {"schema_version": 1, "system": "bundled:doubling", "analysis": "sensitivity",
                          "rng_seed": 0, "parameters": params})
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert str(info.value).startswith(field)


def test_parse_and_version_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)
    p = _write(tmp_path, {"schema_version": 2, "system": "bundled:doubling", "analysis": "orbit", "rng_seed": 0})
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(p)


def test_analysis_mismatch(tmp_path):
    p = _write(tmp_path, {"schema_version": 1, "system": "bundled:doubling", "analysis": "banks", "rng_seed": 0})
    with pytest.raises(ConfigError, match="analysis"):
        load_config(p, analysis="sensitivity")


def test_system_path_relative_to_config(tmp_path):
    sysdir = tmp_path / "systems"
    sysdir.mkdir()
    (sysdir / "d.json").write_text(json.dumps(load_system("bundled:doubling").data))
    p = _write(tmp_path, {"schema_version": 1, "system": "systems/d.json", "analysis": "orbit", "rng_seed": 0,
                          "parameters": {"x": 0.25, "horizon": 3}})
    res = run(load_config(p))
    assert res.exit_code == 0 and res.artifacts["orbit.csv"].splitlines() == ["n,x", "0,0.25", "1,0.5", "2,0", "3,0"]


def test_bad_system_spec_names_field():
    with pytest.raises(ConfigError, match=r"sequence\.generators\[0\]\.r"):
        system_from_json({"schema_version": 1, "space": {"kind": "interval"},
                          "sequence": {"variant": "finitely-generated", "generators": [{"map": "logistic"}],
                                       "schedule": {"kind": "constant"}}})


def test_bundled_systems_load():
    assert {"doubling", "identity", "f-system", "g-system", "shift8", "scaled-tent"} <= set(bundled_systems())
    for name in bundled_systems():
        load_system(f"bundled:{name}")


def test_orbit_csv_f_system(tmp_path):
    assert main(["orbit", "--config", str(CONFIGS / "f-system-orbit.json"), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "orbit.csv").read_text().splitlines()
    assert rows == ["n,x", "0,1", "1,2", "2,1", "3,2", "4,1"]


def test_banks_report_constants(tmp_path):
    main(["banks", "--config", str(CONFIGS / "doubling-banks.json"), "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["constants"]["eta"] == pytest.approx(1 / 72, abs=1e-12)
    assert (tmp_path / "pair_matrix.csv").read_text().startswith("U_index,V_index,N\n")
    assert (tmp_path / "witnesses.csv").read_text().startswith("x,y,n,separation\n")


def test_escape_writes_error_report(tmp_path):
    assert main(["orbit", "--config", str(CONFIGS / "g-system-orbit-escape.json"), "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "error" and "DomainEscape" in report["error"]


def test_seed_override_is_echoed(tmp_path):
    cfg = build_config({"schema_version": 1, "system": "bundled:doubling", "rng_seed": 1}, "sensitivity", seed=99)
    assert run(cfg).report["config"]["rng_seed"] == 99


@pytest.mark.parametrize("name", ["doubling-banks", "doubling-collective", "shift8-linear-synchronous"])
def test_reports_are_reproducible(name):
    path = CONFIGS / f"{name}.json"
    a, b = run(load_config(path)).report, run(load_config(path)).report
    a.pop("timing"), b.pop("timing")
    assert dumps(a) == dumps(b)


def test_threads_do_not_change_reports(monkeypatch):
    path = CONFIGS / "doubling-sensitivity.json"
    monkeypatch.setenv("NADS_THREADS", "1")
    a = run(load_config(path)).report
    monkeypatch.setenv("NADS_THREADS", "4")
    b = run(load_config(path)).report
    a.pop("timing"), b.pop("timing")
    assert dumps(a) == dumps(b)
