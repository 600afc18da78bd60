import csv
import json

import pytest

from bracketlab import cli
from bracketlab.errors import ConfigError


def _run(tmp_path, *argv, name="report.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_verify_lemmas_passes(tmp_path):
    code, report = _run(tmp_path, "verify-lemmas", "--pairs", "100", "--samples", "20000", "--ellipsoid-pairs", "20")
    assert code == 0
    assert report["results"]["transition"]["pairs"] == 100
    assert all(c["verdict"] == "pass" for c in report["checks"])


def test_corrupted_cap_fails_with_violation(tmp_path):
    code, report = _run(tmp_path, "verify-lemmas", "--pairs", "20", "--samples", "20000", "--ellipsoid-pairs", "5",
                        "--cap-scale", "0.3")
    assert code == 1
    assert {c["name"]: c["verdict"] for c in report["checks"]}["transition-holder-bound"] == "fail"
    assert report["results"]["violations"]


def test_malformed_matrix_is_config_error(tmp_path, capsys):
    assert cli.main(["classify", "--matrix", "[[2, 1], [1"]) == 2
    assert "matrix" in capsys.readouterr().err
    assert cli.main(["classify", "--matrix", "[[2, 0], [0, 1]]"]) == 2


def test_runtime_error_exit_code(tmp_path):
    # ten replicas cannot pin down a sixth moment
    code, report = _run(tmp_path, "moment-check", "--p", "3", "--n-grid", "[100, 200, 300, 400]", "--replicas", "10")
    assert code == 3
    assert report["error"]["kind"] == "UnstableEstimate"
    assert report["checks"] == []


def test_missing_eps_names_key():
    with pytest.raises(ConfigError) as err:
        cli.parse_config(["brackets", "--family", "balls"])
    assert err.value.key == "eps"
    assert cli.main(["brackets", "--family", "balls"]) == 2


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"family": "balls", "eps": 0.5, "colour": "red"}))
    with pytest.raises(ConfigError) as err:
        cli.parse_config(["brackets", "--config", str(path)])
    assert err.value.key == "colour"


def test_flag_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"family": "balls", "eps": 0.5, "dim": 3}))
    _, cfg, _ = cli.parse_config(["brackets", "--config", str(path), "--eps", "0.2"])
    assert cfg["eps"] == 0.2 and cfg["dim"] == 3


def test_emit_config_round_trip(tmp_path, capsys):
    argv = ["clt-check", "--process", "iid", "--dim", "1", "--n", "500", "--observable",
            json.dumps({"type": "rectangle-indicator", "lo": [0.0], "hi": [0.5]})]
    assert cli.main([*argv, "--emit-config"]) == 0
    emitted = capsys.readouterr().out
    path = tmp_path / "cfg.json"
    path.write_text(emitted)
    _, again, _ = cli.parse_config(["clt-check", "--config", str(path)])
    assert cli.dumps(again) == emitted


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("BRACKETLAB_THREADS", "3")
    assert cli.parse_config(["classify", "--matrix", "[[2,1],[1,1]]"])[1]["threads"] == 3
    assert cli.parse_config(["classify", "--matrix", "[[2,1],[1,1]]", "--threads", "1"])[1]["threads"] == 1


def test_empty_report_is_valid_json(tmp_path):
    report = cli.make_report("classify", {"seed": 0}, [], {})
    path = tmp_path / "empty.json"
    cli.write_report(report, str(path))
    back = json.loads(path.read_text())
    assert back["checks"] == [] and back["schema_version"] == cli.SCHEMA_VERSION


def test_report_entries_have_schema_fields(tmp_path):
    code, report = _run(tmp_path, "brackets", "--family", "balls", "--eps", "0.5", "--verify", "--n-indices", "50",
                        "--n-points", "50", "--n-mc", "5000", "--n-gap", "5")
    assert code == 0
    assert report["config"]["eps"] == 0.5 and report["seeds"] == {"master_seed": 0}
    for entry in report["checks"]:
        assert set(entry) == {"name", "verdict", "statistic", "threshold", "se"}


def test_entropy_csv(tmp_path):
    path = tmp_path / "curve.csv"
    code, report = _run(tmp_path, "entropy", "--family", "centered-balls", "--delta-grid", "1e-2:1e-1:4log",
                        "--csv", str(path), "--r", "1.5")
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["delta", "count", "cap"]
    assert len(rows) == 5
    assert "converges" in report["results"]


def test_classify_report(tmp_path):
    code, report = _run(tmp_path, "classify", "--matrix", "[[1,1],[0,1]]")
    assert code == 0
    assert report["results"] == {"ergodic": False, "hyperbolic": False, "neutral_degree": 2, "char_poly": [1, -2, 1]}


def test_simulate_matches_matrix_power(tmp_path):
    code, report = _run(tmp_path, "simulate", "--n", "300", "--replicas", "2", "--denominator-bits", "61")
    assert code == 0
    assert report["checks"][0]["name"] == "final-point-matches-matrix-power"


def test_identical_runs_are_byte_identical(tmp_path):
    argv = ["mixing-check", "--n", "2000", "--replicas", "20", "--max-lag", "5", "--seed", "7"]
    # the output path is part of the embedded config, so reuse it
    out = tmp_path / "run.json"
    cli.main([*argv, "--out", str(out)])
    first = out.read_bytes()
    cli.main([*argv, "--out", str(out)])
    assert out.read_bytes() == first
