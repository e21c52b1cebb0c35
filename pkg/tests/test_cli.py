import csv
import json
import math

import pytest

from helicap.cli import (RunConfig, UsageError, cmd_emit_profile, cmd_load_profile, cmd_pipeline_shell,
                         cmd_property_suite, main)
from helicap.geometry import shell
from helicap.helicity import ExactFormWitness, HelicityProfile, boundary_helicity_profile

PI2 = math.pi ** 2


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def write_profile(tmp_path, values, n=2, name="p.json"):
    path = tmp_path / name
    cmd_emit_profile(HelicityProfile.from_values(values, n), str(path))
    return str(path)


def strip_timing(report):
    report = dict(report)
    report.pop("timing")
    return report


def test_profile_round_trip(tmp_path):
    p = boundary_helicity_profile(shell(4, 1.0, 2.0), ExactFormWitness.standard(4))
    path = tmp_path / "shell.json"
    cmd_emit_profile(p, str(path))
    assert cmd_load_profile(str(path)) == p


def test_malformed_profile_diagnostics(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2,\n "components": [}\n')
    with pytest.raises(UsageError, match="line 2"):
        cmd_load_profile(str(bad))
    bad.write_text(json.dumps({"n": 2, "components": [{"label": "a", "h": "x"}]}))
    with pytest.raises(UsageError, match="components/0/h"):
        cmd_load_profile(str(bad))
    bad.write_text(json.dumps({"n": 1, "components": [{"label": "a", "h": 1.0}]}))
    with pytest.raises(UsageError, match="field n"):
        cmd_load_profile(str(bad))


def test_exit_codes(tmp_path, capsys):
    good = write_profile(tmp_path, [2.0, 1.0, -0.5])
    code, rep, _ = run(capsys, "recognition", "verify", good)
    assert code == 0 and rep["pass"] and rep["outputs"]["forced_C"] == 1.0
    # a positive-only profile violates the recognition hypothesis: usage error
    pos = write_profile(tmp_path, [1.0, 2.0], name="pos.json")
    code, rep, err = run(capsys, "recognition", "verify", pos)
    assert code == 2 and rep is None and "negative helicity" in err
    # a check that fails gives 1: a tolerance too tight for quadrature on a thin shell
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"stokes": 1e-300}, "quad_order": 2}))
    code, rep, _ = run(capsys, "stokes", "--region", "shell", "--r", "1", "--R", "1.5", "--config", str(cfg))
    assert code == 1 and rep["checks"] == {"stokes": False}
    with pytest.raises(SystemExit) as exc:
        main(["recognition"])
    assert exc.value.code == 2


def test_bad_config_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"stokes": -1}}))
    code, _, err = run(capsys, "capacity", "thinness", "ball", "--config", str(cfg))
    assert code == 2 and "tolerances/stokes" in err
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "capacity", "thinness", "ball", "--config", str(cfg))[0] == 2
    with pytest.raises(UsageError):
        RunConfig(tolerances={"stokes": 0.0})


def test_config_file_applies(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"quad_order": 12, "seed": 7}))
    code, rep, _ = run(capsys, "helicity", "compute", "--region", "sphere:1", "--config", str(cfg))
    assert code == 0 and rep["config"]["quad_order"] == 12 and rep["seed"] == 7
    assert rep["outputs"]["over_pi^n"] == pytest.approx(1.0, rel=1e-9)
    code, rep, _ = run(capsys, "helicity", "compute", "--region", "sphere:1", "--config", str(cfg), "--seed", "3")
    assert rep["seed"] == 3


def test_helicity_and_stokes_commands(tmp_path, capsys):
    out = tmp_path / "prof.json"
    code, rep, _ = run(capsys, "helicity", "compute", "--region", "shell", "--r", "1", "--R", "2",
                       "--profile-out", str(out))
    assert code == 0
    values = {c["label"]: c["h"] for c in rep["outputs"]["profile"]["components"]}
    assert values["outer"] == pytest.approx(16 * PI2) and values["inner"] == pytest.approx(-PI2)
    assert cmd_load_profile(str(out)).total() == pytest.approx(15 * PI2)
    code, rep, _ = run(capsys, "stokes", "--region", "ellipsoid", "--params", "1,2", "--dim", "4")
    assert code == 0 and rep["outputs"]["relative_residual"] <= 1e-6
    code, _, err = run(capsys, "stokes", "--region", "shell:2,1")
    assert code == 2 and err


def test_recognition_commands(tmp_path, capsys):
    prof = write_profile(tmp_path, [2.0, 1.0, -0.5])
    code, rep, _ = run(capsys, "recognition", "c0", prof)
    assert rep["outputs"]["C0"] == pytest.approx(0.866025, abs=1e-6)
    code, rep, _ = run(capsys, "recognition", "keylemma", prof)
    assert code == 0 and rep["outputs"]["assignments"] == 27
    code, rep, _ = run(capsys, "recognition", "keylemma", prof, "--cap", "10")
    assert code == 2
    csv_path = tmp_path / "spec.csv"
    code, rep, _ = run(capsys, "recognition", "spectrum", prof, "--emit-csv", str(csv_path))
    rows = list(csv.DictReader(csv_path.open()))
    assert code == 0 and rows and rows[-1]["hi"] == "1.0"


def test_capacity_commands(tmp_path, capsys):
    code, rep, _ = run(capsys, "capacity", "bounds", "--from", "ball:1", "--to", "cylinder")
    assert code == 0 and (rep["outputs"]["lower"], rep["outputs"]["upper"]) == (1.0, 1.0)
    assert any("NONSQUEEZE" in s for s in rep["outputs"]["derivation"])
    code, rep, _ = run(capsys, "capacity", "bounds", "--to", "shell:1,1.1", "--emit-csv", str(tmp_path / "b.csv"))
    assert rep["outputs"]["lower"] == pytest.approx(0.0025)
    code, rep, _ = run(capsys, "capacity", "bounds", "--from", "shell:1,2", "--to", "z", "--cbar")
    assert rep["outputs"]["lower"] >= 1.0
    code, rep, _ = run(capsys, "capacity", "normalization", "ball:2")
    assert rep["outputs"]["verdict"] == "normalized"
    code, rep, _ = run(capsys, "capacity", "thinness", "ball")
    assert rep["outputs"]["verdict"] == "fails"
    code, rep, _ = run(capsys, "capacity", "axioms", "--suite", "single", "--emit-csv", str(tmp_path / "ax.csv"))
    assert code == 0 and len(list(csv.reader((tmp_path / "ax.csv").open()))) > 100
    code, rep, _ = run(capsys, "capacity", "counterexample")
    assert code == 0
    assert run(capsys, "capacity", "bounds", "--to", "ball:q")[0] == 2


def test_pipeline_examples():
    inputs, out, checks = cmd_pipeline_shell(1.0, 2.0, 2)
    assert all(checks.values()) and out["forced_C"] == 1.0
    assert out["profile_over_pi^n"]["outer"] == pytest.approx(16.0, rel=1e-12)
    assert out["profile_over_pi^n"]["inner"] == pytest.approx(-1.0, rel=1e-12)
    _, out, checks = cmd_pipeline_shell(1.0, 1.01, 2)
    assert all(checks.values())
    _, out, checks = cmd_pipeline_shell(1.0, 1.5, 3)
    assert all(checks.values())
    with pytest.raises(UsageError):
        cmd_pipeline_shell(2.0, 2.0, 2)
    with pytest.raises(UsageError):
        cmd_pipeline_shell(1.0, 2.0, 1)


def test_pipeline_command_is_deterministic(tmp_path, capsys):
    out = tmp_path / "log.jsonl"
    argv = ["pipeline", "shell", "--r", "1", "--R", "2", "--n", "2", "--out", str(out)]
    code1, rep1, _ = run(capsys, *argv)
    code2, rep2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert strip_timing(rep1) == strip_timing(rep2)
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and strip_timing(json.loads(lines[0])) == strip_timing(rep1)


def test_property_suite_command(capsys):
    assert cmd_property_suite(0, 0)[2] == {k: True for k in ("forms", "stokes", "scaling", "recognition", "capacity")}
    a = cmd_property_suite(5, 3)
    b = cmd_property_suite(5, 3)
    assert a == b and all(a[2].values())
    code, rep, _ = run(capsys, "suite", "--count", "2", "--seed", "1")
    assert code == 0 and rep["seed"] == 1


def test_property_suites_seed_zero_full_count():
    _, suites, checks = cmd_property_suite(0, 100)
    assert all(checks.values()), suites
    assert all(s["instances"] == 100 for s in suites.values())
