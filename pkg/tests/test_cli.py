import json
from pathlib import Path

import pytest

from qpb.cli import main
from qpb.report import Report, Runner, SuiteConfig, run_suite

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_hopf_suite_passes(capsys):
    code, out, _ = run(capsys, "suite", str(CONFIGS / "hopf_axioms.json"))
    rep = json.loads(out)
    assert code == 0
    assert rep["failed"] == 0 and rep["passed"] == 4


def test_corrupted_antipode_fails(capsys):
    code, out, _ = run(capsys, "suite", str(CONFIGS / "corrupted_antipode.json"), "--no-timing")
    rep = json.loads(out)
    assert code == 1
    [check] = rep["checks"]
    assert check["status"] == "fail"
    assert check["witness"]["failures"]["antipode_law"]


def test_empty_selection(capsys):
    code, out, _ = run(capsys, "suite", str(CONFIGS / "empty.json"))
    assert code == 0 and json.loads(out)["checks"] == []


def test_report_deterministic(capsys, tmp_path):
    path = CONFIGS / "trivial_u1.json"
    _, a, _ = run(capsys, "suite", str(path), "--no-timing")
    _, b, _ = run(capsys, "suite", str(path), "--no-timing", "--out", str(tmp_path / "r.json"))
    assert a == b
    assert (tmp_path / "r.json").read_text().strip() == b.strip()
    rep = json.loads(a)
    names = [c["name"] for c in rep["checks"]]
    assert names == sorted(names)
    assert rep["failed"] == 0


def test_skipped_checks(capsys):
    cfg = SuiteConfig(name="hf", suites=["freeness", "preconnection"], bundle="hopf_fibration", window=2)
    rep = run_suite(cfg)
    status = {c.name: c.status for c in rep.checks}
    assert status == {"freeness.hopf_fibration": "pass", "preconnection": "skipped"}
    assert rep.exit_code == 0


def test_engine_errors_become_failed_checks():
    rep = Report("x", {})
    r = Runner(rep)
    r.run("boom", lambda: (_ for _ in ()).throw(ValueError("bad")))
    r.run("fine", lambda: None)
    r.run("witness", lambda: {"ok": False, "where": 1})
    assert [c.status for c in rep.checks] == ["fail", "pass", "fail"]
    assert rep.exit_code == 1


def test_bad_config(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"suites": ["nope"]}))
    assert run(capsys, "suite", str(p))[0] == 2
    p.write_text(json.dumps({"window": 0}))
    assert run(capsys, "suite", str(p))[0] == 2
    p.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "suite", str(p))[0] == 2
    p.write_text("{")
    assert run(capsys, "suite", str(p))[0] == 2
    assert run(capsys, "suite", str(tmp_path / "missing.json"))[0] == 2


def test_overrides_from_cli(capsys):
    code, out, _ = run(capsys, "suite", str(CONFIGS / "hopf_axioms.json"), "--window", "2", "--q", "3", "--seed", "7")
    rep = json.loads(out)
    assert code == 0
    assert rep["config"]["q"] == "3" and rep["config"]["seed"] == 7


def test_dims(capsys):
    code, out, _ = run(capsys, "dims", "--group", "u1")
    d = json.loads(out)
    assert code == 0
    assert d["psi_inv"] == 1
    assert d["exterior"][:3] == [1, 1, 0]


def test_dims_s3(capsys):
    code, out, _ = run(capsys, "dims", "--group", "s3", "--ideal", "subset:132,213,321", "--window", "2", "--n-max", "3")
    d = json.loads(out)
    assert d["psi_inv"] == 3 and d["exterior"] == [1, 3, 4, 3] and d["wedge"] == [1, 3, 7, 15]


def test_witness(capsys):
    code, out, _ = run(capsys, "witness", "--element", "z")
    d = json.loads(out)
    pairs = sorted((p["q"][0][1], p["b"][0][1]) for p in d["pairs"])
    assert pairs == [(["alpha*"], ["alpha"]), (["gamma*"], ["gamma"])]


def test_table_A2_flip(capsys):
    code, out, _ = run(capsys, "table", "A", "--flip", "2", "--n", "2")
    d = json.loads(out)
    assert d["matrix"] == [["0", "0", "0", "0"], ["0", "1", "-1", "0"], ["0", "-1", "1", "0"], ["0", "0", "0", "0"]]


def test_table_rho_chi(capsys):
    code, out, _ = run(capsys, "table", "rho", "--params", "1", "2")
    d = json.loads(out)
    assert code == 0 and d["values"]["1"] == []
    assert d["values"]["z"]
    code, out, _ = run(capsys, "table", "chi", "--params", "1", "2", "--minus", "1", "2")
    assert all(v == [] for v in json.loads(out)["values"].values())


def test_budget_env(monkeypatch, capsys):
    monkeypatch.setenv("QPB_BUDGET", "2")
    code, _, err = run(capsys, "table", "A", "--flip", "2", "--n", "3")
    assert code == 2 and "BudgetError" in err
