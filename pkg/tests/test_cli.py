import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergodia.cli import main
from ergodia.config import ConfigError, build, read_config, write_config
from ergodia.fixtures import fixture_config, load_fixture, model_from_config, random_config
from ergodia.suites import SUITES, Context, run_suites


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _strip(report):
    report = dict(report)
    report.pop("meta")
    return report


@pytest.mark.parametrize("fixture", ["fix-a", "fix-b", "fix-c", "bijective"])
def test_all_suites_pass(fixture, capsys):
    code, out, _ = run(["run", "--fixture", fixture, "--suite", "all", "--quiet"], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["verdict"] == "pass"
    assert report["schema"] == 1
    assert report["summary"]["failed"] == []


def test_report_shape(capsys):
    _, out, _ = run(["run", "--fixture", "fix-a", "--suite", "transfer", "--quiet"], capsys)
    report = json.loads(out)
    assert set(report) == {"schema", "environment", "verdict", "summary", "checks", "meta"}
    assert report["environment"]["depth"] == 3
    names = [c["name"] for c in report["checks"]]
    assert names == sorted(names)
    for c in report["checks"]:
        assert {"name", "anchor", "deviation", "tolerance", "pass"} <= set(c)
    assert "timestamp" in report["meta"]


def test_fix_b_transfer_report(capsys):
    _, out, _ = run(["run", "--fixture", "fix-b", "--suite", "transfer", "--quiet"], capsys)
    by = {c["name"]: c for c in json.loads(out)["checks"]}
    assert by["transfer.R_eq_Sstar"]["deviation"] == pytest.approx(0.5, abs=1e-12)
    assert by["transfer.R_eq_Sstar"]["pass"]
    assert by["transfer.rhoR_eq_Sstar"]["deviation"] <= 1e-10
    assert by["transfer.rhoR_eq_Sstar"]["pass"]


def test_determinism_seed_7(capsys):
    reports = []
    for _ in range(2):
        _, out, _ = run(["run", "--fixture", "fix-b", "--seed", "7", "--quiet"], capsys)
        reports.append(_strip(json.loads(out)))
    assert json.dumps(reports[0], sort_keys=True) == json.dumps(reports[1], sort_keys=True)


def test_seed_changes_probes(capsys):
    outs = []
    for seed in ("1", "2"):
        _, out, _ = run(["run", "--fixture", "fix-a", "--suite", "operators", "--seed", seed,
                         "--quiet"], capsys)
        outs.append(_strip(json.loads(out)))
    assert outs[0]["environment"]["seed"] != outs[1]["environment"]["seed"]
    assert outs[0]["checks"] != outs[1]["checks"]


def test_report_file_and_csv(tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, out, err = run(["run", "--fixture", "fix-c", "--suite", "structure", "--report", str(rep),
                          "--csv", str(tmp_path / "m")], capsys)
    assert code == 0 and out == ""
    assert "pass" in err
    assert json.loads(rep.read_text())["verdict"] == "pass"
    assert (tmp_path / "m" / "R_sigma.csv").exists()
    # variable fiber size: no Cuntz grid
    assert not (tmp_path / "m" / "cuntz_grid.csv").exists()


def test_failing_check_exit_code(tmp_path, capsys):
    cfg = fixture_config("fix-a")
    model, mu = build(cfg)
    from ergodia.filters import FilterBank
    from ergodia.fixtures import silo_bank

    cfg["bank"] = FilterBank(tuple(1.2 * m for m in silo_bank(model)), model, mu).to_json()
    path = tmp_path / "bad_bank.json"
    write_config(cfg, path)
    code, out, err = run(["run", "--config", str(path), "--suite", "cuntz"], capsys)
    assert code == 1
    report = json.loads(out)
    assert report["verdict"] == "fail"
    assert any(n.startswith("cuntz[input]") for n in report["summary"]["failed"])
    assert "FAIL" in err


@pytest.mark.parametrize("mutate, path", [
    (lambda c: c.pop("measure"), "measure"),
    (lambda c: c.update(alphabet=0), "alphabet"),
    (lambda c: c["admissible"][0].__setitem__(1, 2), "admissible[0][1]"),
    (lambda c: c["measure"].__setitem__("kind", "gibbs"), "measure.kind"),
    (lambda c: c["measure"]["params"]["transition"][1].__setitem__(0, "2/3"),
     "measure.params.transition[1]"),
    (lambda c: c["measure"]["params"]["initial"].__setitem__(0, "x"),
     "measure.params.initial[0]"),
    (lambda c: c.update(depth=1), "depth"),
    (lambda c: c.update(run={"tol": -1}), "run.tol"),
])
def test_config_errors_are_structured(tmp_path, capsys, mutate, path):
    cfg = fixture_config("fix-b")
    mutate(cfg)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, _, err = run(["run", "--config", str(p)], capsys)
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["path"] == path
    assert payload["error"]["reason"]


def test_inadmissible_transition_reported(tmp_path, capsys):
    cfg = fixture_config("fix-c")
    cfg["measure"]["params"]["transition"][1] = ["1/2", "1/2"]
    p = tmp_path / "c.toml"
    write_config(cfg, p)
    code, _, err = run(["run", "--config", str(p)], capsys)
    assert code == 2
    assert json.loads(err)["error"]["path"] == "measure"


def test_bad_inputs(tmp_path, capsys):
    assert run(["run", "--fixture", "nope"], capsys)[0] == 2
    assert run(["run"], capsys)[0] == 2
    assert run(["run", "--fixture", "fix-a", "--suite", "bogus"], capsys)[0] == 2
    (tmp_path / "x.yaml").write_text("a: 1")
    assert run(["run", "--config", str(tmp_path / "x.yaml")], capsys)[0] == 2
    (tmp_path / "x.toml").write_text("alphabet = [")
    code, _, err = run(["run", "--config", str(tmp_path / "x.toml")], capsys)
    assert code == 2 and "malformed" in json.loads(err)["error"]["reason"]


@pytest.mark.parametrize("ext", ["toml", "json"])
@pytest.mark.parametrize("name", ["fix-a", "fix-b", "fix-c", "fix-silo", "fix-haar", "random"])
def test_gen_round_trip(tmp_path, capsys, name, ext):
    path = tmp_path / f"{name}.{ext}"
    assert run(["gen", name, "--seed", "4", "--out", str(path)], capsys)[0] == 0
    cfg = read_config(path)
    model, mu = build(cfg)
    if name.startswith("fix-") and name not in ("fix-silo", "fix-haar"):
        assert cfg == fixture_config(name)
    if name == "random":
        assert cfg == random_config(4)
    code, out, _ = run(["run", "--config", str(path), "--quiet"], capsys)
    assert code == 0, json.loads(out)["summary"]["failed"]


def test_gen_stdout_and_depth(capsys):
    code, out, _ = run(["gen", "fix-a", "--depth", "4", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["depth"] == 4


def test_depth_override(capsys):
    code, out, _ = run(["run", "--fixture", "fix-a", "--depth", "4", "--suite", "structure",
                        "--quiet"], capsys)
    report = json.loads(out)
    assert code == 0 and report["environment"]["depth"] == 4
    by = {c["name"]: c for c in report["checks"]}
    assert by["structure.wold_matches_exactness"]["extra"]["dims"] == [1, 8, 4, 2, 1]


def test_export_csv(tmp_path, capsys):
    code, out, _ = run(["export", "--fixture", "fix-b", "--csv", str(tmp_path)], capsys)
    assert code == 0 and "S_sigma.csv" in out
    rows = list(csv.reader(open(tmp_path / "S_sigma_adjoint.csv")))
    model, mu = load_fixture("fix-b")
    assert rows[0][1:] == model.labels(3)
    vals = np.array([[complex(*map(float, c.split(","))) for c in r[1:]] for r in rows[1:]])
    assert vals.shape == (4, 8)
    bank = json.loads((tmp_path / "cyclic_bank.json").read_text())
    assert bank["space"] == "phi"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ergodia.cli", "run", "--fixture", "fix-a",
                           "--suite", "transfer", "--quiet"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "pass"


def test_config_error_object():
    e = ConfigError("measure.kind", "bad")
    assert e.to_json() == {"error": {"path": "measure.kind", "reason": "bad"}}


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.sampled_from([(2, 3), (3, 3), (2, 4)]))
def test_suites_pass_on_random_chains(seed, shape):
    model, mu = model_from_config(random_config(seed, *shape))
    checks = run_suites(Context(model, mu, tol=1e-9, seed=seed), SUITES)
    assert [c.name for c in checks if not c.passed] == []
