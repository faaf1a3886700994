import json

import numpy as np
import pytest

from conftest import random_rotation
from qecw import corpus, formats
from qecw.cli import main
from qecw.errors import ProgramSyntaxError, UnsupportedVersion, ValidationFailed
from qecw.ir import (
    ApplyU,
    H,
    MeasQbit,
    MkQbit,
    Noise,
    QProgram,
    Release,
    Return,
    cnot,
    phase,
    rot,
    ulet,
)
from qecw.sim import evaluate_exact

PROGRAMS = {**corpus.CORPUS, **corpus.EXTRA}


def doc(*stmts, version=1):
    return json.dumps({"version": version, "statements": list(stmts)})


# --- program documents


@pytest.mark.parametrize("name", sorted(PROGRAMS))
def test_round_trip_corpus(name):
    p = PROGRAMS[name]()
    assert formats.parse_program(formats.serialize_program(p)) == p


def test_round_trip_matrices_phase_release_noise(rng):
    r = random_rotation(rng)
    p = QProgram([
        MkQbit(False, "a"), MkQbit(True, "b"),
        ApplyU(rot("a", r) + rot("b", phase(0.25)) + ulet(False, "w", cnot("a", "w") + cnot("a", "w"))),
        Noise("depolarizing", 0.125, ("a", "b")),
        Release("b"),
        MeasQbit("a", "m"), Return(["m"]),
    ])
    back = formats.parse_program(formats.serialize_program(p).encode())
    assert back == p
    assert back.stmts[2].u.steps[0].r.close_to(r, 0)


def test_serialization_is_stable():
    p = corpus.conditional()
    assert formats.serialize_program(p) == formats.serialize_program(formats.parse_program(formats.serialize_program(p)))


@pytest.mark.parametrize("text, kind, location", [
    ("{not json", "SyntaxError", "line 1 column 2"),
    (doc(version=2), "UnsupportedVersion", "version"),
    ("[]", "SyntaxError", "$"),
    (doc({"op": "teleport"}), "SyntaxError", "statements[0].op"),
    (doc({"op": "mkqbit", "name": "q"}), "SyntaxError", "statements[0]"),
    (doc({"op": "mkqbit", "name": "q", "init": 1}), "SyntaxError", "statements[0].init"),
    (doc({"op": "mkqbit", "name": "q", "init": False},
         {"op": "apply", "gates": [{"gate": "warp", "target": "q"}]}), "SyntaxError",
     "statements[1].gates[0].gate"),
    (doc({"op": "mkqbit", "name": "q", "init": False},
         {"op": "apply", "gates": [{"gate": "rot", "target": "q",
                                    "matrix": [[1, 0], [1, 0], [0, 0], [1, 0]]}]}),
     "SyntaxError", "statements[1].gates[0].matrix"),
    (doc({"op": "return", "names": ["m", 3.5]}), "SyntaxError", "statements[0].names[1]"),
])
def test_parse_errors(text, kind, location):
    with pytest.raises(ProgramSyntaxError) as e:
        formats.parse_program(text)
    assert e.value.kind == kind and e.value.location == location
    assert e.value.to_dict()["location"] == location


def test_unsupported_version_is_a_syntax_error_subclass():
    assert issubclass(UnsupportedVersion, ProgramSyntaxError)


def test_parse_runs_validation():
    with pytest.raises(ValidationFailed) as e:
        formats.parse_program(doc({"op": "mkqbit", "name": "q", "init": False}))
    assert e.value.to_dict()["violations"][0]["kind"] == "MissingReturn"


def test_outcome_keys():
    assert formats.outcome_key((True, False)) == "True,False"
    assert formats.outcome_key(()) == "()"
    for key in ("True,False", "()", "False"):
        assert formats.outcome_key(formats.parse_outcome_key(key)) == key
    with pytest.raises(ValueError):
        formats.parse_outcome_key("yes")


def test_num_rounds_to_twelve_digits():
    assert formats.num(0.1 + 0.2) == 0.3
    assert formats.num(1 / 3) == 0.333333333333


# --- CLI


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_sim(capsys):
    code, out, _ = run_cli(capsys, "sim", "builtin:conditional")
    assert code == 0
    d = formats.parse_distribution(out)
    assert d.max_abs_diff(evaluate_exact(corpus.conditional())) < 1e-12
    assert json.loads(out) == {"False,False": 0.25, "False,True": 0.25, "True,True": 0.5}


def test_cli_sim_encoded(capsys):
    code, out, _ = run_cli(capsys, "sim", "builtin:bell", "--code", "steane7")
    assert code == 0
    assert json.loads(out) == {"False,False": 0.5, "True,True": 0.5}


def test_cli_run_and_seed_env(capsys, monkeypatch):
    code, out, _ = run_cli(capsys, "run", "builtin:example", "--seed", "4")
    assert code == 0 and json.loads(out) == {"result": "True", "seed": 4}
    monkeypatch.setenv("QECW_SEED", "17")
    _, out, _ = run_cli(capsys, "run", "builtin:bell")
    assert json.loads(out)["seed"] == 17
    _, again, _ = run_cli(capsys, "run", "builtin:bell")
    assert out == again


def test_cli_transform_output_is_a_valid_program(capsys, tmp_path):
    target = tmp_path / "enc.json"
    code, out, _ = run_cli(capsys, "transform", "builtin:bell", "--code", "bitflip3", "--out", str(target))
    assert code == 0 and out == ""
    p = formats.parse_program(target.read_bytes())
    assert evaluate_exact(p).max_abs_diff(evaluate_exact(corpus.bell())) < 1e-9
    code, out, _ = run_cli(capsys, "sim", str(target))
    assert code == 0 and json.loads(out) == {"False,False": 0.5, "True,True": 0.5}


def test_cli_example_and_stdin(capsys, monkeypatch, tmp_path):
    _, text, _ = run_cli(capsys, "example", "interference")
    assert formats.parse_program(text) == corpus.interference()
    import io
    import sys

    monkeypatch.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(text.encode())))
    code, out, _ = run_cli(capsys, "sim", "-")
    assert code == 0 and json.loads(out) == {"True": 1.0}


def test_cli_trials_json(capsys):
    code, out, _ = run_cli(capsys, "trials", "builtin:identity_probe", "--code", "bitflip3",
                           "--noise", "bit_flip", "--p", "0.1", "--trials", "200", "--seed", "3")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"report"}
    rep = formats.read_report(out)
    assert rep["trials"] == 200 and rep["code"] == "bitflip3" and rep["rng"]
    assert 0 <= rep["encoded"]["rate"] <= rep["encoded"]["ci_hi"] <= 1
    _, again, _ = run_cli(capsys, "trials", "builtin:identity_probe", "--code", "bitflip3",
                          "--noise", "bit_flip", "--p", "0.1", "--trials", "200", "--seed", "3")
    assert again == out


def test_cli_trials_timing_metadata(capsys):
    _, out, _ = run_cli(capsys, "trials", "builtin:example", "--code", "bitflip3", "--noise", "none",
                        "--trials", "5", "--timing")
    assert "elapsed_seconds" in json.loads(out)["metadata"]


def test_cli_trials_csv(capsys):
    code, out, _ = run_cli(capsys, "trials", "builtin:identity_probe", "--code", "phaseflip3",
                           "--noise", "phase_flip", "--p", "0.05", "--trials", "100", "--seed", "1",
                           "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == ",".join(formats.CSV_COLUMNS)
    row = formats.read_report(out, "csv")
    assert row["trials"] == 100 and row["p"] == 0.05 and row["code"] == "phaseflip3"


@pytest.mark.parametrize("argv", [
    ["sim"],
    ["bogus"],
    ["trials", "builtin:example", "--code", "bitflip3"],
    ["trials", "builtin:example", "--code", "bitflip3", "--noise", "bit_flip", "--p", "1.5"],
    ["transform", "builtin:example"],
    ["sim", "builtin:example", "--code", "shor9"],
    ["sim", "builtin:example", "--policy", "sometimes"],
    ["sim", "builtin:nope"],
    ["sim", "/nonexistent/file.json"],
])
def test_cli_usage_errors_exit_one(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 1 and out == "" and err


def test_cli_json_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(doc({"op": "mkqbit", "name": "q", "init": False}))
    code, _, err = run_cli(capsys, "sim", str(bad), "--json-errors")
    assert code == 1
    obj = json.loads(err)
    assert obj["error"] == "ValidationFailed" and obj["violations"][0]["kind"] == "MissingReturn"
    bad.write_text("{")
    code, _, err = run_cli(capsys, "--json-errors", "sim", str(bad))
    assert code == 1 and json.loads(err)["error"] == "SyntaxError"


def test_cli_simulation_errors_exit_two(capsys, tmp_path):
    p = QProgram([MkQbit(False, "q"), ApplyU(rot("q", H) + ulet(False, "w", cnot("q", "w"))),
                  MeasQbit("q", "m"), Return(["m"])])
    path = tmp_path / "leaky.json"
    path.write_text(formats.serialize_program(p))
    code, _, err = run_cli(capsys, "sim", str(path), "--json-errors")
    assert code == 2 and json.loads(err)["error"] == "AncillaNotReturned"
    noisy = QProgram([MkQbit(False, "q"), Noise("bit_flip", 0.5, ("q",)), MeasQbit("q", "m"), Return(["m"])])
    path.write_text(formats.serialize_program(noisy))
    code, _, err = run_cli(capsys, "sim", str(path))
    assert code == 2 and "StochasticNoisePresent" in err
    code, out, _ = run_cli(capsys, "run", str(path), "--seed", "0")
    assert code == 0 and json.loads(out)["result"] in {"True", "False"}


def test_report_tallies_sum_to_trials(capsys):
    _, out, _ = run_cli(capsys, "trials", "builtin:conditional", "--code", "bitflip3", "--noise",
                        "bit_flip", "--p", "0.05", "--trials", "150", "--seed", "2")
    rep = formats.read_report(out)
    for side in ("plain", "encoded"):
        assert sum(rep[side]["tallies"].values()) == 150
    assert rep["notes"] and rep["reference"]["deterministic"] is False
    assert np.isclose(sum(rep["reference"]["distribution"].values()), 1.0)
