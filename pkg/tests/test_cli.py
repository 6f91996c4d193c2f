from __future__ import annotations

import json

import pytest

from helpers import make_doc
from jumpstop.cli import main

GRID = "nx=40,nt=200,xlo=-2,xhi=2"


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_validate_canned_passes(tmp_path):
    assert run(tmp_path, "validate", "--model", "canned:jump_diffusion") == 0
    doc = json.loads((tmp_path / "validate.json").read_text())
    assert doc["version"] == "v0.1.0" and doc["passed"] is True


def test_validate_negative_weight_fails(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(make_doc(marks=[{"atoms": [[1.0, -0.5]]}],
                                        beta=[{"family": "constant", "params": {"value": [1.0]}}])))
    assert run(tmp_path, "validate", "--model", str(path)) == 1
    assert "nonnegative" in capsys.readouterr().err


def test_unreadable_model_exits_one(tmp_path):
    assert run(tmp_path, "solve", "--model", str(tmp_path / "missing.json"), "--grid", GRID) == 1
    assert run(tmp_path, "solve", "--model", "canned:drift_tent") == 1  # no grid


def test_cfl_breach_exits_one(tmp_path):
    assert run(tmp_path, "solve", "--model", "canned:diffusion_drift", "--grid", "nx=400,nt=10,xlo=-2,xhi=2") == 1


def test_solve_writes_surface_and_summary(tmp_path):
    assert run(tmp_path, "solve", "--model", "canned:drift_tent", "--grid", GRID, "--kind", "cooperative",
               "--x0", "0.5") == 0
    lines = (tmp_path / "surface.csv").read_text().splitlines()
    assert lines[0] == "t,x1,value,control_index,stop"
    assert len(lines) == 1 + 201 * 41
    summary = json.loads((tmp_path / "solve.json").read_text())
    assert summary["envelopes"]["bounds"]["ok"] is True
    assert summary["value_at_x0"] == pytest.approx(1.0, abs=0.05)
    assert summary["config"]["kind"] == "cooperative"


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--model", "canned:jump_diffusion", "--grid", GRID, "--out", str(out)]) == 0
        assert main(["simulate", "--model", "canned:jump_diffusion", "--grid", GRID, "--x0", "0.2", "--paths",
                     "500", "--dump-paths", "3", "--seed", "4", "--out", str(out)]) == 0
    for name in ("surface.csv", "paths.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ja, jb = (json.loads((d / "simulate.json").read_text()) for d in (a, b))
    assert ja["estimate"] == jb["estimate"] and ja["stderr"] == jb["stderr"]


def test_oracle_and_compare(tmp_path):
    assert run(tmp_path, "solve", "--model", "canned:diffusion_drift", "--grid", GRID) == 0
    assert run(tmp_path, "oracle", "--model", "canned:diffusion_drift", "--grid", GRID) == 0
    header = (tmp_path / "oracle.csv").read_text().splitlines()[0]
    assert header.endswith(",source")
    s, o = str(tmp_path / "surface.csv"), str(tmp_path / "oracle.csv")
    assert run(tmp_path, "compare", s, o, "--tol", "0.5", "--model", "canned:diffusion_drift") == 0
    forward = json.loads((tmp_path / "compare.json").read_text())["sup_norm"]
    assert run(tmp_path, "compare", o, s, "--tol", "1e-12") == 2
    backward = json.loads((tmp_path / "compare.json").read_text())["sup_norm"]
    assert forward == backward > 0
    assert run(tmp_path, "compare", s, s) == 0


def test_compare_rejects_mismatched_grids(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["solve", "--model", "canned:drift_tent", "--grid", GRID, "--out", str(a)])
    main(["solve", "--model", "canned:drift_tent", "--grid", "nx=20,nt=200,xlo=-2,xhi=2", "--out", str(b)])
    assert run(tmp_path, "compare", str(a / "surface.csv"), str(b / "surface.csv")) == 1


def test_facelift_command(tmp_path):
    assert run(tmp_path, "facelift", "--model", "canned:unbounded_jump", "--grid", GRID) == 0
    rows = (tmp_path / "terminal.csv").read_text().splitlines()
    assert rows[0] == "x1,g,ghat"
    for r in rows[1:]:
        _, g, ghat = map(float, r.split(","))
        assert ghat >= g
    assert json.loads((tmp_path / "facelift.json").read_text())["gspec"]["family"] == "jump_reach"


def test_target_command(tmp_path):
    assert run(tmp_path, "target", "--model", "canned:singleton_diffusion", "--grid", "nx=40,nt=400,xlo=-2,xhi=2",
               "--x0", "0.5", "--paths", "300", "--steps", "100") == 0
    doc = json.loads((tmp_path / "target.json").read_text())
    assert abs(doc["estimate"] - doc["solver_value"]) < 0.2
    assert doc["n_paths"] == 300


def test_simulate_needs_a_start(tmp_path):
    assert run(tmp_path, "simulate", "--model", "canned:drift_tent", "--grid", GRID) == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0 and "v0.1.0" in capsys.readouterr().out
