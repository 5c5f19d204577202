import json
from pathlib import Path

import numpy as np
import pytest

from qwires import io as qio
from qwires import linalg as la
from qwires.cli import main

WIRES = Path(__file__).resolve().parent.parent / "wires"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_cluster(capsys):
    code, out, _ = run(capsys, "classify", WIRES / "cluster.json")
    report = json.loads(out)
    assert code == 0
    assert report["verdict"] == "Wire"
    assert report["normal_form"]["phi"] == pytest.approx(np.pi)


@pytest.mark.parametrize("name,verdict", [("degenerate.json", "NotGapped"), ("not_unital.json", "NotUnital")])
def test_classify_failure_verdicts(capsys, name, verdict):
    code, out, _ = run(capsys, "classify", WIRES / name)
    assert code == 1
    assert json.loads(out)["verdict"] == verdict


def test_truncated_json_is_usage_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text((WIRES / "cluster.json").read_text()[:40])
    code, _, err = run(capsys, "classify", bad)
    assert code == 2
    assert "invalid JSON" in err


def test_unknown_flag_is_usage_error(capsys):
    assert run(capsys, "classify", "--bogus")[0] == 2


def test_compile_single_step(capsys):
    code, out, _ = run(capsys, "compile", WIRES / "cluster.json", WIRES / "target_s07.json")
    plan = json.loads(out)
    assert code == 0
    assert len(plan["steps"]) == 1


def test_compile_haar_target(capsys):
    code, out, _ = run(capsys, "compile", WIRES / "t_resource.json", WIRES / "target_haar.json")
    assert code == 0
    assert json.loads(out)["residual"] <= 1e-6


def test_compile_on_diagonal_wire_fails(capsys):
    code, out, _ = run(capsys, "compile", WIRES / "diagonal_w.json", WIRES / "target_x.json")
    assert code == 1
    assert "error" in json.loads(out)


def test_compile_not_reached_reports_residual(capsys, tmp_path):
    code, out, _ = run(capsys, "compile", WIRES / "t_resource.json", WIRES / "target_haar.json", "--max-len", 1)
    assert code == 1
    assert json.loads(out)["residual"] > 1e-6


def test_simulate_is_deterministic_and_verified(capsys, tmp_path):
    plan = WIRES / "plan_cluster_haar.json"
    a = run(capsys, "simulate", WIRES / "cluster.json", plan, "--seed", 5, "--sites", 10)
    b = run(capsys, "--seed", 5, "simulate", WIRES / "cluster.json", plan, "--sites", 10)
    assert a == b
    assert a[0] == 0
    lines = [json.loads(line) for line in a[1].splitlines()]
    assert all(r["deviation"] <= 1e-10 for r in lines[:-1])
    assert lines[-1]["summary"]["max_deviation"] <= 1e-10


def test_simulate_zero_probability_branch(capsys):
    code, out, _ = run(capsys, "simulate", WIRES / "cluster.json", WIRES / "plan_zero_probability.json",
                       "--sites", 6)
    records = [json.loads(line) for line in out.splitlines()]
    assert code == 1
    assert records[0]["error"] == "ZeroProbabilityBranch"
    assert records[-1]["summary"]["status"] == "zero_probability"


def test_simulate_respects_cap(capsys):
    code, _, _ = run(capsys, "--cap", 8, "simulate", WIRES / "cluster.json", WIRES / "plan_cluster_haar.json",
                     "--sites", 9)
    assert code == 2


def test_simulate_rejects_plan_for_other_wire(capsys):
    code, _, _ = run(capsys, "simulate", WIRES / "t_resource.json", WIRES / "plan_cluster_haar.json")
    assert code == 2


def test_locus_circle_and_ellipse(capsys):
    code, out, _ = run(capsys, "locus", WIRES / "cluster.json", "--samples", 12, "--format", "csv")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "theta,arg_lambda,delta,prob"
    assert all(float(r.split(",")[3]) == pytest.approx(0.5) for r in rows[1:])
    code, out, _ = run(capsys, "locus", WIRES / "t_resource.json", "--samples", 12)
    probs = [r["prob"] for r in json.loads(out)["rows"]]
    assert max(probs) - min(probs) > 0.1


def test_locus_needs_two_samples(capsys):
    assert run(capsys, "locus", WIRES / "cluster.json", "--samples", 1)[0] == 2


@pytest.mark.parametrize("wire", ["cluster.json", "t_resource.json"])
def test_couple_report(capsys, wire):
    a = run(capsys, "couple", WIRES / wire, "--seed", 3)
    b = run(capsys, "couple", WIRES / wire, "--seed", 3)
    assert a == b and a[0] == 0
    report = json.loads(a[1])
    assert sum(s > 1e-6 for s in report["V_schmidt"]) == 2
    assert report["decouple"]["fidelity"] == pytest.approx(1)


def test_couple_decouple_identity_byproducts(capsys):
    for seed in range(6):
        report = json.loads(run(capsys, "couple", WIRES / "cluster.json", "--seed", seed)[1])
        if report["decouple"]["outcome"] == 0:
            byproducts = [qio.decode_matrix(b, (2, 2)) for b in report["decouple"]["byproducts"]]
            assert all(np.allclose(b, la.I2) for b in byproducts)
            return
    pytest.fail("no seed produced outcome 0")


def test_bose_single_pair(capsys):
    code, out, _ = run(capsys, "bose", "--pairs", 1, "--rounds", 1, "--format", "jsonl")
    lines = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert lines[-2] == {"cut": 1, "entropy": pytest.approx(1.0), "n_sites": 2, "round": 1}
    assert lines[-1]["summary"]["reference"] == 1.725


def test_bose_zero_rounds(capsys):
    code, out, _ = run(capsys, "bose", "--pairs", 3, "--rounds", 0)
    assert code == 0
    assert all(r["entropy"] == 0 for r in json.loads(out)["rows"])


def test_bose_cap(capsys, monkeypatch):
    monkeypatch.setenv("QWIRES_CAP", "6")
    assert run(capsys, "bose", "--pairs", 4)[0] == 2


def test_props_and_out_file(capsys, tmp_path):
    target = tmp_path / "props.json"
    code, out, _ = run(capsys, "props", "--out", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["all_passed"]
