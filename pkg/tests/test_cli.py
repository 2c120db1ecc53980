import json
import os
import subprocess
import sys

import pytest

from nestsolve.cli import (cmd_analyze, cmd_solve, cmd_verify, load_problem, main, problem_path,
                           shipped_problems)
from nestsolve.epsilon import EpsRecurrence, initial_value_demand
from nestsolve.sums import canonicalize
from nestsolve.syntax import parse_expr as E

import golden as g

PROBLEMS = ["simple-rec", "eps-rec", "coupled-rec", "coupled-ode"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def problem_doc(name):
    with open(problem_path(name)) as fh:
        return json.load(fh)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_shipped():
    assert shipped_problems() == sorted(PROBLEMS)


def test_analyze_coupled_text(capsys):
    code, out, _ = run(capsys, "analyze", "coupled-rec")
    assert code == 0
    assert out.strip() == "pivot I1, 3 initial values, order -2 from N=1; rhs depth (-2,-2,-2)"


def test_analyze_coupled_json(capsys):
    code, out, _ = run(capsys, "analyze", "coupled-rec", "--json")
    assert code == 0
    assert json.loads(out)["summary"] == [[["I1", 3, -2]], [-2, -2, -2], []]


def test_analyze_scalar_matches_demand():
    p = load_problem("eps-rec")
    rep = cmd_analyze(p)
    mu, d = initial_value_demand(EpsRecurrence(p.coefficients, p.rhs))
    assert rep["pivots"][0]["initial_values"] == d == 3
    assert cmd_analyze(load_problem("simple-rec"))["pivots"][0]["initial_values"] == 3


@pytest.mark.parametrize("name", PROBLEMS)
def test_solve_then_verify(capsys, tmp_path, name):
    code, out, _ = run(capsys, "solve", name, "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "solved" and doc["verification"] == "passed"
    sol = tmp_path / "sol.json"
    sol.write_text(out)
    code, out, _ = run(capsys, "verify", name, str(sol), "--json")
    assert code == 0
    assert json.loads(out)["status"] == "pass"


def test_solve_simple_string():
    doc = cmd_solve(load_problem("simple-rec"))
    assert E(doc["solution"]["I"]) == canonicalize(E(g.SIMPLE_SOLUTION))


def test_solve_coupled_strings():
    doc = cmd_solve(load_problem("coupled-rec"))
    for u, row in zip(["I1", "I2", "I3"], g.COUPLED_OUT):
        for j, s in zip(("-3", "-2"), row):
            assert E(doc["solution"][u][j]) == canonicalize(E(s))


def test_printed_solution_verifies():
    rep = cmd_verify(load_problem("simple-rec"), {"solution": {"I": g.SIMPLE_SOLUTION}, "first_index": 1})
    assert rep["status"] == "pass"


def test_mutation_caught(capsys, tmp_path):
    doc = cmd_solve(load_problem("simple-rec"))
    assert "59*N^2" in doc["solution"]["I"]
    doc["solution"]["I"] = doc["solution"]["I"].replace("59*N^2", "60*N^2")
    sol = write(tmp_path, "bad.json", doc)
    code, out, _ = run(capsys, "verify", "simple-rec", sol, "--json")
    rep = json.loads(out)
    assert code == 1 and rep["status"] == "fail"
    assert rep["counterexample"]["index"] == 1


def test_mutation_caught_coupled():
    p = load_problem("coupled-rec")
    doc = cmd_solve(p)
    doc["solution"]["I2"]["-2"] = "-1"
    rep = cmd_verify(p, doc)
    assert rep["status"] == "fail" and isinstance(rep["counterexample"]["index"], int)


def test_malformed_ratfun(capsys, tmp_path):
    doc = problem_doc("simple-rec")
    doc["coefficients"][0] = "-2*(N+1)*(N+2^"
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 2
    rep = json.loads(err)
    assert rep["error"] == "parse" and rep["position"] == 14 and rep["field"] == "coefficients[0]"


def test_rhs_too_shallow(capsys, tmp_path):
    doc = problem_doc("eps-rec")
    doc["rhs"] = {"order_start": -3, "order_end": -3, "coefficients": doc["rhs"]["coefficients"][:1]}
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 4
    rep = json.loads(err)
    assert rep["error"] == "rhs-too-shallow" and rep["needed"] == -2


def test_coupled_rhs_too_shallow(capsys, tmp_path):
    doc = problem_doc("coupled-rec")
    r = doc["rhs"][1]
    doc["rhs"][1] = {"order_start": -3, "order_end": -3, "coefficients": r["coefficients"][:1]}
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    rep = json.loads(err)
    assert code == 4 and rep["needed"] == -2 and rep["rhs"] == "r2"


def test_missing_initial_values(capsys, tmp_path):
    doc = problem_doc("simple-rec")
    doc["initial_values"] = doc["initial_values"][:2]
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 4 and json.loads(err)["error"] == "insufficient-initial-values"


def test_inconclusive(capsys, tmp_path):
    doc = {"kind": "recurrence", "coefficients": ["-1", "-(N+1)", "1"], "rhs": "1",
           "initial_values": [{"index": 0, "value": "1"}, {"index": 1, "value": "1"}]}
    code, out, _ = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 3 and json.loads(out)["status"] == "inconclusive"


def test_not_nested(capsys, tmp_path):
    doc = {"kind": "recurrence", "coefficients": ["-1", "1"], "rhs": "0",
           "initial_values": [{"index": 0, "value": "1"}, {"index": 1, "value": "1"},
                              {"index": 2, "value": "3"}]}
    code, out, _ = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 1 and json.loads(out)["witness"]["index"] == 2


def test_unknown_kind(capsys, tmp_path):
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", {"kind": "matrix"}), "--json")
    assert code == 2 and "unknown kind" in json.loads(err)["message"]


def test_byte_stable(capsys):
    outs = [run(capsys, "solve", "eps-rec", "--json")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_byte_stable_across_processes():
    outs = []
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        r = subprocess.run([sys.executable, "-m", "nestsolve.cli", "solve", "simple-rec", "--json"],
                           capture_output=True, env=env, check=True)
        outs.append(r.stdout)
    assert outs[0] == outs[1]


def test_check_window_flag(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "simple-rec", "--json", "--check-window", "7")
    assert code == 0 and json.loads(out)["check_window"] == 7
    sol = write(tmp_path, "sol.json", json.loads(out))
    code, out, _ = run(capsys, "verify", "simple-rec", sol, "--json", "--check-window", "7")
    rep = json.loads(out)
    assert rep["check_window"] == 7
    lo, hi = rep["indices"]
    assert hi - lo == 2 + 7
    code, out, _ = run(capsys, "verify", "simple-rec", sol, "--check-window", "7")
    assert "check window 7" in out


def test_check_window_env(capsys, monkeypatch):
    monkeypatch.setenv("NESTSOLVE_CHECK_WINDOW", "9")
    code, out, _ = run(capsys, "solve", "simple-rec", "--json")
    assert json.loads(out)["check_window"] == 9


def test_orders_override(capsys):
    code, out, _ = run(capsys, "solve", "eps-rec", "--orders", "-3..-3", "--json")
    assert code == 0 and list(json.loads(out)["solution"]["I"]) == ["-3"]


def test_foreign_variable(capsys, tmp_path):
    doc = {"kind": "recurrence", "coefficients": ["-1", "x"], "rhs": "0",
           "initial_values": [{"index": 0, "value": "1"}]}
    code, _, err = run(capsys, "solve", write(tmp_path, "p.json", doc), "--json")
    assert code == 2 and "coefficients[1]" in json.loads(err)["message"]
    doc = problem_doc("coupled-ode")
    doc["matrices"][0][0][0] = "N"
    code, _, err = run(capsys, "solve", write(tmp_path, "q.json", doc), "--json")
    assert code == 2 and "matrices[0][0][0]" in json.loads(err)["message"]
