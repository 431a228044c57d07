from __future__ import annotations

import json
from pathlib import Path

import pytest

from supplytwin.cli import main
from supplytwin.harness import shipped
from supplytwin.ledger import Ledger

GOLDEN = Path(__file__).parent / "golden"
MOZZARELLA = str(shipped("mozzarella"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_both_writes_artifacts(capsys, tmp_path):
    code, out, _ = run(capsys, "run", MOZZARELLA, "--out", str(tmp_path))
    assert code == 0
    assert "verdict: traces equal" in out
    for name in ("trace-real.json", "trace-ideal.json", "verdict.json", "ledger.jsonl", "records.jsonl"):
        assert (tmp_path / name).exists()
    assert json.loads((tmp_path / "verdict.json").read_text()) == {"equal": True}


def test_run_stdout_golden(capsys):
    code, out, _ = run(capsys, "run", MOZZARELLA, "--format", "json")
    assert code == 0
    assert out == (GOLDEN / "run-mozzarella.json").read_text()


def test_run_real_then_dump_ledger(capsys, tmp_path):
    assert run(capsys, "run", MOZZARELLA, "--world", "real", "--out", str(tmp_path))[0] == 0
    path = tmp_path / "ledger.jsonl"
    code, out, _ = run(capsys, "dump-ledger", str(path), "--format", "json")
    assert code == 0 and out == path.read_text()
    assert all(json.loads(line) for line in out.splitlines())
    assert len(Ledger.replay(path).entries) == len(out.splitlines()) - 1
    code, out, _ = run(capsys, "dump-ledger", str(path))
    assert code == 0 and "enroll" in out


def test_broken_simulator_exit_1(capsys):
    code, out, _ = run(capsys, "run", MOZZARELLA, "--break-simulator")
    assert code == 1 and "DIVERGENCE" in out
    assert run(capsys, "ladder", MOZZARELLA, "--break-simulator", "--attempts", "5")[0] == 1


def test_ladder_pass(capsys):
    code, out, _ = run(capsys, "ladder", str(shipped("honest-handover")), "--attempts", "20")
    assert code == 0 and out.rstrip().endswith("ladder: pass")


@pytest.mark.parametrize("strategy,reason", [("double-handover", "NotIntact"),
                                              ("forge-credential", "BadCredential")])
def test_attack(capsys, strategy, reason):
    code, out, _ = run(capsys, "attack", strategy, "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["designated"] == reason and reason in doc["reasons"] and not doc["illegal_change"]


def test_attack_stdout_golden(capsys):
    code, out, _ = run(capsys, "attack", "double-handover", "--seeds", "2")
    assert code == 0
    assert out == (GOLDEN / "attack-double-handover.txt").read_text()


def test_seed_override_changes_ids(capsys, tmp_path):
    run(capsys, "run", MOZZARELLA, "--world", "real", "--out", str(tmp_path / "a"))
    run(capsys, "run", MOZZARELLA, "--world", "real", "--seed", "99", "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "ledger.jsonl").read_text()
    b = (tmp_path / "b" / "ledger.jsonl").read_text()
    assert a != b


@pytest.mark.parametrize("argv", [
    ("attack", "bogus-name"),
    ("ladder", "/nonexistent.json"),
    ("run", "/nonexistent.json"),
    ("dump-ledger", "/nonexistent.jsonl"),
    ("validate",),
])
def test_input_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_schema_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "parties": [{"id": "x", "role": "Wizard"}], "steps": []}))
    code, _, err = run(capsys, "run", str(bad))
    assert code == 2 and "scenario error" in err
    bad.write_text("{not json")
    assert run(capsys, "validate", str(bad))[0] == 2


def test_validate_and_schema(capsys):
    code, out, _ = run(capsys, "validate", MOZZARELLA, "--format", "json")
    assert code == 0 and json.loads(out)["valid"]
    code, out, _ = run(capsys, "validate", "--print-schema")
    assert code == 0 and json.loads(out)["type"] == "object"
