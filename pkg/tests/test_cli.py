import json

import pytest

from gapcert.cli import main, parse_range, parse_region


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_parsers():
    assert parse_range("2..4") == [2, 3, 4]
    assert parse_range("3,5") == [3, 5]
    assert len(parse_region("0,0..1,2", 2)) == 6


def test_gap_csv(capsys):
    code, out = run(capsys, "gap", "--model", "heisenberg_fm", "--sizes", "3..5", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "n,dim,gap,degeneracy,tol,method"
    assert len(out.splitlines()) == 4


def test_model_validate(capsys, tmp_path, frustrated_triangle):
    from gapcert.models import model_to_dict

    code, out = run(capsys, "model", "validate", "--model", "aklt", "--sizes", "2..4")
    assert code == 0 and json.loads(out)["passed"]
    path = tmp_path / "tri.json"
    path.write_text(json.dumps(model_to_dict(frustrated_triangle)))
    code, _ = run(capsys, "model", "validate", "--model-file", str(path), "--sizes", "3")
    assert code == 3


def test_delta_json(capsys):
    code, out = run(capsys, "delta", "--model", "heisenberg_fm", "--A", "0..4", "--B", "3..7")
    doc = json.loads(out)
    assert code == 0 and abs(doc["delta"] - 0.6) < 1e-9


def test_verify_commands(capsys):
    assert run(capsys, "verify", "dl", "--model", "aklt", "--n", "4", "--samples", "20")[0] == 0
    assert run(capsys, "verify", "split", "--model", "heisenberg_fm", "--A", "0..5", "--B", "3..7", "--q", "2")[0] == 0
    assert run(capsys, "verify", "projineq", "--pairs", "5", "--dim-space", "16")[0] == 0
    code, out = run(capsys, "verify", "gamma", "--model", "heisenberg_fm", "--n", "5")
    assert code == 0 and not json.loads(out)["certified"]


def test_certify_exit_codes(capsys):
    code, out = run(capsys, "certify", "--delta", "zero", "--schedule", "k2", "--k0", "1")
    assert code == 0 and json.loads(out)["valid"]
    code, out = run(capsys, "certify", "--delta", "exponential:c=1,alpha=0.5", "--k0", "3")
    assert code == 3 and not json.loads(out)["valid"]


def test_pvbs_and_threshold(capsys):
    code, out = run(capsys, "pvbs", "--lambdas", "1.0", "--A", "0..9", "--B", "5..14")
    assert code == 3 and abs(json.loads(out)["delta"]["delta"] - 0.5) < 1e-12
    code, out = run(capsys, "threshold", "--gaps", "10:1.0", "--format", "csv")
    assert code == 0 and out.startswith("n,gap,knabe_1d")


def test_config_errors(capsys):
    assert main(["gap", "--model", "nope"]) == 2
    assert main(["delta", "--A", "0..3"]) == 2
    assert main(["bogus"]) == 2
    capsys.readouterr()


def test_budget_exit(capsys, monkeypatch):
    monkeypatch.setenv("GAPCERT_MAX_DIM", "64")
    assert main(["gap", "--model", "aklt", "--sizes", "6"]) == 4
