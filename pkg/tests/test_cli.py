import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from collidere.cli import main
from collidere.expressions import format_expression, parse_expression, pretty_expression


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def schema(name):
    text = resources.files("collidere").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def valid(payload, name):
    jsonschema.validate(payload, schema(name))
    return payload


# --- exit codes and verdicts -----------------------------------------------


def test_check_x9_impossible():
    code, text = run("check", "X9", "--into", "2D4")
    report = valid(json.loads(text), "report")
    assert code == 1 and report["verdict"] == "IMPOSSIBLE"
    assert "series" in report["failed"]


def test_check_possible_and_unknown():
    code, text = run("check", "K(4,2)", "--into", "3D4+3A1")
    assert code == 0 and valid(json.loads(text), "report")["certificate"]["kind"] == "existence-table"
    code, text = run("check", "K(3,4)", "--into", "6A3")
    assert code == 2 and json.loads(text)["verdict"] == "UNKNOWN"


def test_check_text_mode():
    code, text = run("check", "K(3,4)", "--into", "6A3", "--format", "text")
    assert text.splitlines()[0] == "K(3,4) -> 6A_3: UNKNOWN"
    assert code == 2


def test_budget_exceeded_exit_code():
    code, text = run("check", "K(3,4)", "--into", "6A3", "--budget", "1")
    assert code == 65 and json.loads(text)["verdict"] == "UNKNOWN"


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("COLLIDERE_BUDGET", "1")
    code, _ = run("decompose", "K9", "--into", "12K3")
    assert code == 65
    monkeypatch.setenv("COLLIDERE_BUDGET", "zero")
    assert run("decompose", "K9", "--into", "12K3")[0] == 64


def test_budget_never_yields_impossible_from_search():
    code, text = run("check", "K9", "--into", "12K3", "--budget", "1")
    assert json.loads(text)["verdict"] != "IMPOSSIBLE" and code in (0, 2, 65)


@pytest.mark.parametrize(
    "argv",
    [
        ("check", "X9", "--into", "2Q7"),
        ("check", "X9", "--into", "0D4"),
        ("check", "2X9", "--into", "D4"),
        ("invariants", "E8"),
        ("invariants", "(1:•"),
        ("witness-omp", "4", "--parts", "3,x"),
        ("witness-omp", "4", "--parts", "1"),
        ("spectrum", "1", "3"),
    ],
)
def test_usage_errors_exit_64(argv, capsys):
    assert run(*argv)[0] == 64
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [(), ("check", "X9"), ("frobnicate",), ("collide-nodes", "-3")])
def test_argument_errors_exit_64(argv):
    with pytest.raises(SystemExit) as exc:
        run(*argv)
    assert exc.value.code == 64


# --- individual commands ---------------------------------------------------


def test_invariants_j10():
    code, text = run("invariants", "J10")
    data = valid(json.loads(text), "invariants")
    assert code == 0
    assert data["invariants"] == {"branches": 3, "mult": 3, "delta": 6, "mu": 10, "kappa": 12, "tau_es": 9}
    assert data["brieskorn"] == {"p": 3, "q": 6}
    assert data["signature"] == {"plus": 0, "zero": 2, "minus": 8}


def test_invariants_by_key_and_without_model():
    code, text = run("invariants", "(1:(2:•,•),•)")
    data = valid(json.loads(text), "invariants")
    assert data["type"] == "D6" and data["spectrum"] is None


def test_collide_nodes_six():
    code, text = run("collide-nodes", "6")
    data = valid(json.loads(text), "collide-nodes")
    assert code == 0 and len(data["types"]) == 4
    assert sorted(t["name"] for t in data["types"]) == ["A11", "D10", "J10", "X9"]


def test_decompose_with_targets():
    code, text = run("decompose", "J10", "--into", "3A3")
    data = valid(json.loads(text), "decompose")
    assert code == 0 and data["status"] == "WITNESS"
    code, text = run("decompose", "K5", "--into", "3K3+A1")
    assert code == 1 and json.loads(text)["status"] == "NO_DECOMPOSITION"


def test_decompose_enumeration():
    code, text = run("decompose", "D6")
    data = valid(json.loads(text), "enumeration")
    assert code == 0 and data["complete"]
    assert {e["targets"] for e in data["targets"]} == {"A3+2A1", "D4+A1", "4A1"}


def test_decompose_hint_file(tmp_path, pg24):
    path = tmp_path / "w.json"
    path.write_text(json.dumps(pg24))
    code, text = run("decompose", "K21", "--into", "21K5", "--hint", str(path))
    assert code == 0 and json.loads(text)["nodes"] == 0
    code, text = run("check", "K21", "--into", "21K5", "--hint", str(path))
    report = json.loads(text)
    assert code == 1 and "hirzebruch" in report["failed"]


def test_bad_hint_is_usage_error(tmp_path):
    path = tmp_path / "w.json"
    path.write_text("not json")
    assert run("decompose", "D4", "--into", "3A1", "--hint", str(path))[0] == 64


def test_canonical_omp():
    code, text = run("canonical-omp", "K(4,2)")
    data = valid(json.loads(text), "canonical-omp")
    assert data["targets"] == "2X9"
    assert data["parts"] == {"4": 2} and data["count"] == 2


def test_witness_omp():
    code, text = run("witness-omp", "6", "--parts", "4,3")
    data = valid(json.loads(text), "witness-omp")
    assert code == 0 and data["criterion"] == "POSSIBLE" and data["nodes"] == 6
    code, text = run("witness-omp", "5", "--parts", "3,3,3")
    assert code == 1 and json.loads(text)["incidence"] is None
    assert run("witness-omp", "9", "--parts", ",".join(["3"] * 12))[0] == 2


def test_spectrum_command():
    code, text = run("spectrum", "3", "6")
    data = valid(json.loads(text), "spectrum")
    assert data["mu"] == 10 and data["signature"] == {"plus": 0, "zero": 2, "minus": 8}
    assert run("spectrum", "6", "3")[1] == text


def test_deviations_file(tmp_path):
    path = tmp_path / "dev.json"
    run("check", "J10", "--into", "3A3", "--deviations", str(path))
    assert json.loads(path.read_text()) == []


# --- batch ---------------------------------------------------------------


def test_batch_jsonl(tmp_path):
    lines = [
        {"source": "X9", "targets": "2D4"},
        {"source": "K(4,2)", "targets": ["3D4", "3A1"]},
        {"source": "K(3,4)", "targets": "6A3"},
    ]
    path = tmp_path / "problems.jsonl"
    path.write_text("\n".join(json.dumps(x) for x in lines) + "\n\n")
    code, text = run("batch", str(path))
    reports = [valid(json.loads(line), "report") for line in text.splitlines()]
    assert code == 0
    assert [r["verdict"] for r in reports] == ["IMPOSSIBLE", "POSSIBLE", "UNKNOWN"]


def test_batch_bad_line(tmp_path, capsys):
    path = tmp_path / "problems.jsonl"
    path.write_text('{"source": "X9", "targets": "2D4"}\n{"source": "X9"}\nnot json\n')
    code, text = run("batch", str(path))
    assert code == 64 and len(text.splitlines()) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "line 3" in err


# --- determinism and formatting ---------------------------------------------


def test_output_is_byte_identical_across_runs():
    argv = ("check", "K(4,2)", "--into", "3D4+3A1")
    assert run(*argv) == run(*argv)
    first = subprocess.run([sys.executable, "-m", "collidere.cli", *argv], capture_output=True, check=False)
    second = subprocess.run([sys.executable, "-m", "collidere.cli", *argv], capture_output=True, check=False)
    assert first.stdout == second.stdout and first.returncode == 0
    assert first.stdout.decode() == run(*argv)[1]


@pytest.mark.parametrize("text", ["2A7+4A1", "K(4,3)+2D6", "X9", "J10+3A3+(1:(2:•,•),•)", "K5 + 3 K3 + A1"])
def test_expression_roundtrip(text):
    types = parse_expression(text).types()
    assert parse_expression(format_expression(types)).types() == types
    assert pretty_expression(types)


def test_every_schema_is_a_valid_schema():
    for name in ("report", "invariants", "decompose", "enumeration", "canonical-omp", "collide-nodes", "witness-omp", "spectrum", "graph"):
        jsonschema.Draft202012Validator.check_schema(schema(name))
