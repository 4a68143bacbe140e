import json
import subprocess
import sys

import jsonschema
import pytest

from cocoercivity.cli import resolve_seed, run
from cocoercivity.schema import validate_problem, validate_report

QUAD = {"version": 1, "kind": "certify", "function": {"id": "quadratic", "Q": [[1, 0], [0, 4]]}, "beta": 4}
BOX_SOLVE = {
    "version": 1, "kind": "solve",
    "phi": {"id": "box", "lower": [0, 0], "upper": [1, 1]},
    "operator": {"id": "quadratic", "Q": [[1, 0], [0, 1]], "b": [2, -1]},
    "domain": {"box": {"lower": [-10, -10], "upper": [10, 10]}},
    "x0": [0.5, 0.5], "mu": 1.0, "beta": 1.0,
}


def write(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return str(p)


def run_json(tmp_path, argv):
    out = tmp_path / "out.json"
    code = run(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_certify_exit_codes(tmp_path):
    code, rep = run_json(tmp_path, ["certify", "--spec", write(tmp_path, QUAD)])
    assert code == 0 and rep["type"] == "BHReport" and rep["consistency"]
    code, rep = run_json(tmp_path, ["certify", "--spec", write(tmp_path, dict(QUAD, beta=3))])
    assert code == 1
    assert rep["verdict_a"]["witness"] is not None and rep["verdict_c"]["witness"] is not None


def test_certify_local(tmp_path):
    spec = {"version": 1, "kind": "certify", "function": {"id": "example31"}, "beta": 1.0, "point": [2.0]}
    code, rep = run_json(tmp_path, ["certify", "--spec", write(tmp_path, spec)])
    assert code == 0 and rep["type"] == "LocalCocoReport"
    assert rep["beta_local"] == pytest.approx(2.4297, rel=0.05)


def test_moduli_rotation(tmp_path):
    spec = {"version": 1, "kind": "moduli", "operator": {"id": "rotation"}, "beta": 1.0}
    code, rep = run_json(tmp_path, ["moduli", "--spec", write(tmp_path, spec)])
    assert code == 1
    assert [c["verdict"] for c in rep["checks"]] == ["consistent", "falsified"]


def test_solve_csv_and_json(tmp_path):
    path = write(tmp_path, BOX_SOLVE)
    out = tmp_path / "trace.csv"
    assert run(["solve", "--spec", path, "--out", str(out)]) == 0
    assert out.read_text().startswith("iter,t,x_0,x_1,residual\n")
    code, rep = run_json(tmp_path, ["solve", "--spec", path, "--format", "json"])
    assert code == 0 and rep["converged"] and rep["admissibility"]["admissible"]
    assert rep["x_final"] == [1.0, 0.0]


def test_solve_diverges(tmp_path):
    spec = {"version": 1, "kind": "solve",
            "phi": {"id": "box", "lower": [-1e300, -1e300], "upper": [1e300, 1e300]},
            "operator": {"id": "quadratic", "Q": [[1, 0], [0, 4]]},
            "domain": {"box": {"lower": [-1e20, -1e20], "upper": [1e20, 1e20]}},
            "x0": [0.5, 0.5], "mu": 0.6}
    code, rep = run_json(tmp_path, ["solve", "--spec", write(tmp_path, spec), "--format", "json"])
    assert code == 1 and rep["diverged"] and not rep["admissibility"]["admissible"]


def test_usage_errors(tmp_path, capsys):
    assert run(["bogus"]) == 2
    assert run(["certify"]) == 2  # missing function and beta
    assert run(["certify", "--spec", write(tmp_path, dict(QUAD, extra=1))]) == 2
    assert run(["moduli", "--spec", write(tmp_path, QUAD)]) == 2  # kind mismatch
    assert run(["certify", "--spec", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run(["certify", "--spec", str(tmp_path / "bad.json")]) == 2
    assert run(["certify", "--spec", write(tmp_path, QUAD), "--format", "csv"]) == 2
    notpsd = dict(QUAD, function={"id": "quadratic", "Q": [[1, 0], [0, -1]]})
    assert run(["certify", "--spec", write(tmp_path, notpsd)]) == 2
    assert "error" in capsys.readouterr().err


def test_runtime_error(tmp_path):
    # the iterate leaves the operator's domain
    spec = dict(BOX_SOLVE, phi={"id": "box", "lower": [-1e300, -1e300], "upper": [1e300, 1e300]},
                operator={"id": "quadratic", "Q": [[1, 0], [0, 4]]}, mu=0.6,
                domain={"box": {"lower": [-1, -1], "upper": [1, 1]}})
    spec.pop("beta")
    assert run(["solve", "--spec", write(tmp_path, spec)]) == 3


def test_demo(tmp_path):
    out = tmp_path / "demo.csv"
    assert run(["demo", "example31", "--alpha", "2.0", "--alpha", "1e-6", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("alpha,grid_max_f2,lipschitz_sup,coco_inf,claimed_modulus,verdict")
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["claimed_modulus"]) == pytest.approx(0.79041, abs=1e-5)
    assert row["verdict"] == "falsified" and row["alt_verdict"] == "consistent"
    assert float(row["witness_separation"]) <= 1e-4
    assert len(lines) == 3
    assert run(["demo", "example31", "--alpha", "4.5"]) == 2
    code, rep = run_json(tmp_path, ["demo", "example31", "--alpha", "1.0", "--format", "json"])
    assert code == 0 and rep["rows"][0]["alpha"] == 1.0


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("COCO_SEED", raising=False)
    assert resolve_seed(None, {}) == 42
    monkeypatch.setenv("COCO_SEED", "9")
    assert resolve_seed(None, {}) == 9
    assert resolve_seed(None, {"seed": 3}) == 3
    assert resolve_seed(5, {"seed": 3}) == 5


def test_seed_changes_output(tmp_path):
    path = write(tmp_path, QUAD)
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    run(["certify", "--spec", path, "--out", str(a), "--seed", "1"])
    run(["certify", "--spec", path, "--out", str(b), "--seed", "1"])
    run(["certify", "--spec", path, "--out", str(c), "--seed", "2"])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_reports_validate(tmp_path):
    code, rep = run_json(tmp_path, ["certify", "--spec", write(tmp_path, QUAD)])
    validate_report(rep)
    bad = dict(rep, surprise=True)
    with pytest.raises(jsonschema.ValidationError):
        validate_report(bad)


def test_problem_schema():
    validate_problem(QUAD)
    validate_problem(BOX_SOLVE)
    with pytest.raises(jsonschema.ValidationError):
        validate_problem(dict(QUAD, version=2))
    with pytest.raises(jsonschema.ValidationError):
        validate_problem({"version": 1, "kind": "solve"})
    validate_problem({"version": 1, "kind": "moduli", "operator": {"id": "rotation"},
                      "domain": {"intersection": [{"box": {"lower": [-1, -1], "upper": [1, 1]}},
                                                  {"ball": {"center": [0, 0], "radius": 1}}]}})


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cocoercivity", "certify", "--spec", write(tmp_path, QUAD)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["type"] == "BHReport"
