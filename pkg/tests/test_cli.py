import json
import os

import pytest

from dunkl_lab import cli


def _run(args):
    return cli.main(args)


def test_empty_selection(tmp_path):
    out = str(tmp_path / "out")
    assert _run(["run", "--out-dir", out, "--audits", ""]) == 0
    man = json.load(open(os.path.join(out, "manifest.json")))
    assert man["audits"] == {}
    assert man["files"] == []


def test_unknown_audit_is_config_error(tmp_path):
    assert _run(["run", "--out-dir", str(tmp_path), "--audits",
                 "bogus"]) == 2


def test_bad_delta_is_config_error(tmp_path):
    assert _run(["dyadic-audit", "--out-dir", str(tmp_path),
                 "--override", "ladders.delta=0.5"]) == 2


def test_inadmissible_params_named(tmp_path, capsys):
    rc = _run(["norms", "--out-dir", str(tmp_path),
               "--override", "space.params=0,0.5,2"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "p(s,1)" in err


def test_missing_config_file(tmp_path):
    assert _run(["heat", "--config", str(tmp_path / "nope.cfg"),
                 "--out-dir", str(tmp_path)]) == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "lab.cfg"
    cfg.write_text("[heat]\nt_values = 0.2\n")
    out = str(tmp_path / "out")
    rc = _run(["heat", "--config", str(cfg), "--out-dir", out])
    assert rc == 0
    doc = json.load(open(os.path.join(out, "heat.json")))
    assert "t=0.2" in doc["details"]
    assert doc["passed"] is True


def test_dyadic_audit_emits_clause_verdicts(tmp_path):
    out = str(tmp_path / "out")
    assert _run(["dyadic-audit", "--out-dir", out]) == 0
    doc = json.load(open(os.path.join(out, "dyadic_audit.json")))
    for metric in ("euclidean", "orbit"):
        assert len(doc["details"][metric]["clauses"]) == 5


def test_transform_csv_has_20_rows(tmp_path):
    out = str(tmp_path / "out")
    assert _run(["transform", "--out-dir", out]) == 0
    rows = open(os.path.join(out, "plancherel.csv")).read().strip()
    lines = rows.splitlines()
    assert lines[0] == "scale_index,scale_value,piece_value"
    assert len(lines) == 21


def test_manifest_lists_every_file(tmp_path):
    out = str(tmp_path / "out")
    assert _run(["transform", "--out-dir", out]) == 0
    man = json.load(open(os.path.join(out, "manifest.json")))
    emitted = sorted(f for f in os.listdir(out) if f != "manifest.json")
    assert man["files"] == emitted
    assert man["audits"] == {"transform": "passed"}
    assert len(man["config_hash"]) == 64


def test_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert _run(["transform", "--out-dir", out, "--seed", "3"]) == 0
        outs.append(open(os.path.join(out, "plancherel.csv")).read())
    assert outs[0] == outs[1]


def test_schema_validation():
    good = {"name": "x", "passed": True, "details": {}}
    assert cli.validate_report(good, "audit")
    with pytest.raises(ValueError):
        cli.validate_report({"name": "x", "passed": "yes", "details": {}},
                            "audit")
    with pytest.raises(ValueError):
        cli.validate_report({"name": "x"}, "audit")


def test_lab_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LAB_THREADS", "1")
    assert cli._threads() == 1
    monkeypatch.setenv("LAB_THREADS", "junk")
    assert cli._threads() >= 1
    out = str(tmp_path / "out")
    assert _run(["transform", "--out-dir", out]) == 0
