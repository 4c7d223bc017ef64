import json
from pathlib import Path

import numpy as np
import pytest

from fleetcap.analysis import read_sweep_csv
from fleetcap.cli import (
    EXIT_INFEASIBLE,
    EXIT_INPUT,
    EXIT_LIMIT,
    EXIT_OK,
    EXIT_VALIDATION,
    main,
)
from fleetcap.io import load_instance, load_solution, save_instance, save_solution
from fleetcap.model import Dimensions, Solution

from conftest import make_t0


@pytest.fixture
def t0_file(tmp_path, t0):
    f = tmp_path / "t0.json"
    save_instance(t0, f)
    return f


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_texas(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    code, out, _ = run(capsys, "generate", "--preset", "texas", "--seed", 7, "-o", a)
    assert code == EXIT_OK and "I=5" in out and "seed=7" in out
    run(capsys, "generate", "--preset", "texas", "--seed", 7, "-o", b)
    assert a.read_bytes() == b.read_bytes()
    d = load_instance(a).dims
    assert (d.I, d.J, d.M) == (5, 5, 3)


def test_generate_from_degenerate_spec(tmp_path, capsys):
    spec = {"dims": {"I": 1, "J": 2, "M": 1, "T": 1}, "seed": 1,
            "fleet_cap": [2, 2], "rental_cap": [1, 1], "demand": [1, 1],
            "op_cost": [40, 40], "distance": [90, 90]}
    (tmp_path / "spec.json").write_text(json.dumps(spec), encoding="utf-8")
    out = tmp_path / "inst.json"
    assert run(capsys, "generate", "--spec", tmp_path / "spec.json", "-o", out)[0] == EXIT_OK
    inst = load_instance(out)
    assert np.all(inst.fleet_cap == 2) and np.all(inst.op_cost == 40) and np.all(inst.distance == 90)


def test_generate_bad_spec(tmp_path, capsys):
    (tmp_path / "spec.json").write_text('{"dims": {"I": 1}}', encoding="utf-8")
    code, _, err = run(capsys, "generate", "--spec", tmp_path / "spec.json", "-o", tmp_path / "x.json")
    assert code == EXIT_INPUT and "error" in err


def test_generate_uses_outdir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLEETCAP_OUTDIR", str(tmp_path))
    assert run(capsys, "generate", "--dims", 1, 1, 1, 1, "--seed", 3)[0] == EXIT_OK
    assert (tmp_path / "instance.json").exists()


def test_solve_t0(tmp_path, capsys, t0_file):
    sol = tmp_path / "sol.json"
    rep = tmp_path / "rep.json"
    code, out, _ = run(capsys, "solve", t0_file, "-o", sol, "--report", rep)
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["objective"] == 168.0 and report["status"] == "Optimal"
    assert {"emissions", "budget_usage", "rental_share", "nodes"} <= set(report)
    assert json.loads(rep.read_text()) == report
    assert load_solution(sol).x.item() == 1


def test_solve_enhanced_infeasible(tmp_path, capsys, t0_file):
    code, out, _ = run(capsys, "solve", t0_file, "--variant", "enhanced", "--cap", 50, "-o", tmp_path / "s.json")
    assert code == EXIT_INFEASIBLE and json.loads(out)["status"] == "Infeasible"


def test_solve_enhanced_without_cap(tmp_path, capsys, t0_file):
    assert run(capsys, "solve", t0_file, "--variant", "enhanced", "-o", tmp_path / "s.json")[0] == EXIT_INPUT


def test_solve_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert run(capsys, "solve", bad)[0] == EXIT_INPUT
    assert run(capsys, "solve", tmp_path / "missing.json")[0] == EXIT_INPUT


def test_solve_node_limit(tmp_path, capsys):
    from fleetcap.generate import GenSpec, generate

    f = tmp_path / "i.json"
    save_instance(generate(GenSpec(Dimensions(2, 3, 2, 2), seed=0)).with_cap(2231.0), f)
    code, _, _ = run(capsys, "solve", f, "--variant", "enhanced", "--node-limit", 2, "-o", tmp_path / "s.json")
    assert code == EXIT_LIMIT


def test_sweep_explicit_caps(tmp_path, capsys, t0_file):
    out = tmp_path / "s.csv"
    assert run(capsys, "sweep", t0_file, "--caps", "70,80,100", "-o", out)[0] == EXIT_OK
    rows, summary = read_sweep_csv(out.read_text())
    assert [float(r["objective"]) for r in rows] == [200.0, 200.0, 168.0]
    assert float(summary["base_objective"]) == 168.0


def test_sweep_inf_matches_base_solve(tmp_path, capsys, t0_file):
    out = tmp_path / "s.csv"
    assert run(capsys, "sweep", t0_file, "--caps", "inf", "-o", out)[0] == EXIT_OK
    rows, _ = read_sweep_csv(out.read_text())
    _, solve_out, _ = run(capsys, "solve", t0_file, "-o", tmp_path / "sol.json")
    assert len(rows) == 1 and rows[0]["cap"] == "inf"
    assert float(rows[0]["objective"]) == json.loads(solve_out)["objective"]


def test_sweep_fifteen_rows(tmp_path, capsys):
    inst = tmp_path / "tx.json"
    run(capsys, "generate", "--preset", "texas", "--seed", 7, "-o", inst)
    out = tmp_path / "s.csv"
    assert run(capsys, "sweep", "-n", 15, inst, "-o", out)[0] == EXIT_OK
    rows, _ = read_sweep_csv(out.read_text())
    assert len(rows) == 15


def test_sweep_keeps_going_past_infeasible_caps(tmp_path, capsys, t0_file):
    out = tmp_path / "s.csv"
    assert run(capsys, "sweep", t0_file, "--caps", "50,100", "-o", out)[0] == EXIT_OK
    rows, _ = read_sweep_csv(out.read_text())
    assert [r["status"] for r in rows] == ["Infeasible", "Optimal"]


def test_sweep_is_deterministic(tmp_path, capsys, t0_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "sweep", t0_file, "-n", 4, "-o", a)
    run(capsys, "sweep", t0_file, "-n", 4, "--workers", 2, "-o", b)
    assert a.read_bytes() == b.read_bytes()


def test_validate(tmp_path, capsys, t0, t0_file):
    good = tmp_path / "good.json"
    save_solution(Solution.from_trips(t0, np.ones((1, 1, 1, 1)), np.zeros((1, 1, 1, 1))), good)
    assert run(capsys, "validate", t0_file, good)[0] == EXIT_OK

    broken = tmp_path / "broken.json"
    s = Solution.from_trips(t0, np.ones((1, 1, 1, 1)), np.zeros((1, 1, 1, 1)))
    save_solution(s.replace(y=np.zeros((1, 1, 1))), broken)
    code, out, _ = run(capsys, "validate", t0_file, broken)
    assert code == EXIT_VALIDATION
    assert "Eq2" in out and "1 violation" in out

    wrong_shape = tmp_path / "shape.json"
    save_solution(Solution.zeros(Dimensions(1, 2, 1, 1)), wrong_shape)
    assert run(capsys, "validate", t0_file, wrong_shape)[0] == EXIT_INPUT


def test_oracle_check(tmp_path, capsys, t0_file):
    code, out, _ = run(capsys, "oracle-check", t0_file)
    assert code == EXIT_OK and json.loads(out)["agree"]
    code, out, _ = run(capsys, "oracle-check", t0_file, "--variant", "enhanced", "--cap", 80)
    assert code == EXIT_OK and json.loads(out)["oracle_objective"] == 200.0
    assert run(capsys, "oracle-check", t0_file, "--limit", 2)[0] == EXIT_INPUT


def test_oracle_check_zero_demand(tmp_path, capsys):
    f = tmp_path / "z.json"
    save_instance(make_t0(demand=np.zeros((1, 1, 1, 1))), f)
    code, out, _ = run(capsys, "oracle-check", f)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["oracle_objective"] == rep["solver_objective"] == 28.0


def test_export_lp(tmp_path, capsys, t0_file):
    base, enh = tmp_path / "b.lp", tmp_path / "e.lp"
    assert run(capsys, "export-lp", t0_file, "-o", base)[0] == EXIT_OK
    assert run(capsys, "export-lp", t0_file, "--variant", "enhanced", "--cap", 80, "-o", enh)[0] == EXIT_OK

    def n_rows(text):
        body = text.split("Subject To\n")[1].split("Bounds\n")[0]
        return sum(1 for ln in body.splitlines() if not ln.startswith("    "))

    assert n_rows(enh.read_text()) == n_rows(base.read_text()) + 1
    golden = Path(__file__).parent / "data" / "t0_base.lp"
    assert base.read_text() == golden.read_text()


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == EXIT_INPUT
    assert run(capsys)[0] == EXIT_INPUT
