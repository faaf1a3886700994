"""Program documents (JSON, version 1) and machine-readable reports."""

from __future__ import annotations

import csv
import io
import json

from .errors import NotUnitary, ProgramSyntaxError, UnsupportedVersion, ValidationFailed
from .ir import (
    H,
    I,
    S,
    X,
    Y,
    Z,
    ApplyU,
    Cond,
    MeasQbit,
    MkQbit,
    Noise,
    QProgram,
    Release,
    Return,
    Rot,
    Rotation,
    Swap,
    Ulet,
    Unitary,
    phase,
    validate,
)
from .sim import OutcomeDistribution

VERSION = 1
SUGAR = {"x": X, "y": Y, "z": Z, "h": H, "s": S, "i": I}

CSV_COLUMNS = (
    "code", "channel", "p", "location", "policy", "trials",
    "plain_rate", "plain_ci_lo", "plain_ci_hi",
    "encoded_rate", "encoded_ci_lo", "encoded_ci_hi", "seed",
)


def num(x: float) -> float:
    """Round to 12 significant digits so reports print identically everywhere."""
    return float(f"{x:.12g}")


# --------------------------------------------------------------------------
# programs -> documents


def gate_to_json(step) -> dict:
    if isinstance(step, Rot):
        r = step.r
        if r.label == "phase" and r.theta is not None and r.close_to(phase(r.theta), 0):
            return {"gate": "phase", "target": step.target, "theta": r.theta}
        if r.label in SUGAR and r.close_to(SUGAR[r.label], 0):
            return {"gate": r.label, "target": step.target}
        return {"gate": "rot", "target": step.target,
                "matrix": [[v.real, v.imag] for v in r.entries]}
    if isinstance(step, Swap):
        return {"gate": "swap", "a": step.a, "b": step.b}
    if isinstance(step, Cond):
        return {"gate": "cond", "control": step.control,
                "else": unitary_to_json(step.when_false), "then": unitary_to_json(step.when_true)}
    if isinstance(step, Ulet):
        return {"gate": "ulet", "init": step.init, "name": step.binder,
                "body": unitary_to_json(step.body)}
    raise TypeError(f"unknown gate step {step!r}")


def unitary_to_json(u: Unitary) -> list:
    return [gate_to_json(s) for s in u.steps]


def statement_to_json(s) -> dict:
    if isinstance(s, MkQbit):
        return {"op": "mkqbit", "name": s.binder, "init": s.init}
    if isinstance(s, ApplyU):
        return {"op": "apply", "gates": unitary_to_json(s.u)}
    if isinstance(s, MeasQbit):
        return {"op": "measure", "qubit": s.target, "name": s.binder}
    if isinstance(s, Release):
        return {"op": "release", "qubit": s.target}
    if isinstance(s, Noise):
        return {"op": "noise", "channel": s.channel, "p": s.p, "qubits": list(s.targets)}
    if isinstance(s, Return):
        return {"op": "return", "names": list(s.names)}
    raise TypeError(f"unknown statement {s!r}")


def program_to_document(p: QProgram) -> dict:
    return {"version": VERSION, "statements": [statement_to_json(s) for s in p.stmts]}


def serialize_program(p: QProgram, indent: int | None = 1) -> str:
    return json.dumps(program_to_document(p), indent=indent) + "\n"


# --------------------------------------------------------------------------
# documents -> programs


def _field(obj: dict, key: str, where: str, kinds):
    if not isinstance(obj, dict):
        raise ProgramSyntaxError("expected an object", where)
    if key not in obj:
        raise ProgramSyntaxError(f"missing field {key!r}", where)
    v = obj[key]
    kinds = kinds if isinstance(kinds, tuple) else (kinds,)
    if not isinstance(v, kinds) or (isinstance(v, bool) and bool not in kinds):
        raise ProgramSyntaxError(f"field {key!r} has the wrong type ({type(v).__name__})", f"{where}.{key}")
    return v


def _names(raw, where, kinds=(str,)) -> tuple:
    for j, v in enumerate(raw):
        if not isinstance(v, kinds) or isinstance(v, bool):
            raise ProgramSyntaxError("expected a qubit or result name", f"{where}[{j}]")
    return tuple(raw)


_REF = (str, int)


def _matrix(raw, where) -> Rotation:
    if not (isinstance(raw, list) and len(raw) == 4):
        raise ProgramSyntaxError("matrix must list four [re, im] pairs", where)
    vals = []
    for j, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)):
            raise ProgramSyntaxError("matrix entry must be [re, im]", f"{where}[{j}]")
        vals.append(complex(pair[0], pair[1]))
    try:
        return Rotation(*vals)
    except NotUnitary as e:
        raise ProgramSyntaxError(str(e), where) from None


def gate_from_json(g, where: str):
    kind = _field(g, "gate", where, str)
    if kind == "rot":
        return Rot(_field(g, "target", where, _REF), _matrix(_field(g, "matrix", where, list), f"{where}.matrix"))
    if kind == "phase":
        theta = _field(g, "theta", where, (int, float))
        return Rot(_field(g, "target", where, _REF), phase(float(theta)))
    if kind in SUGAR:
        return Rot(_field(g, "target", where, _REF), SUGAR[kind])
    if kind == "swap":
        return Swap(_field(g, "a", where, _REF), _field(g, "b", where, _REF))
    if kind == "cond":
        return Cond(
            _field(g, "control", where, _REF),
            unitary_from_json(g.get("else", []), f"{where}.else"),
            unitary_from_json(g.get("then", []), f"{where}.then"),
        )
    if kind == "ulet":
        return Ulet(_field(g, "init", where, bool), _field(g, "name", where, str),
                    unitary_from_json(_field(g, "body", where, list), f"{where}.body"))
    raise ProgramSyntaxError(f"unknown gate {kind!r}", f"{where}.gate")


def unitary_from_json(gates, where: str) -> Unitary:
    if not isinstance(gates, list):
        raise ProgramSyntaxError("expected a list of gates", where)
    return Unitary(tuple(gate_from_json(g, f"{where}[{j}]") for j, g in enumerate(gates)))


def statement_from_json(s, where: str):
    op = _field(s, "op", where, str)
    if op == "mkqbit":
        return MkQbit(_field(s, "init", where, bool), _field(s, "name", where, str))
    if op == "apply":
        return ApplyU(unitary_from_json(_field(s, "gates", where, list), f"{where}.gates"))
    if op == "measure":
        return MeasQbit(_field(s, "qubit", where, _REF), _field(s, "name", where, str))
    if op == "release":
        return Release(_field(s, "qubit", where, _REF))
    if op == "noise":
        return Noise(_field(s, "channel", where, str), float(_field(s, "p", where, (int, float))),
                     _names(_field(s, "qubits", where, list), f"{where}.qubits", _REF))
    if op == "return":
        return Return(_names(_field(s, "names", where, list), f"{where}.names"))
    raise ProgramSyntaxError(f"unknown op {op!r}", f"{where}.op")


def program_from_document(doc) -> QProgram:
    if not isinstance(doc, dict):
        raise ProgramSyntaxError("document must be a JSON object", "$")
    version = doc.get("version")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported version {version!r} (expected {VERSION})", "version")
    stmts = _field(doc, "statements", "$", list)
    return QProgram(tuple(statement_from_json(s, f"statements[{i}]") for i, s in enumerate(stmts)))


def parse_program(data: bytes | str) -> QProgram:
    """Parse and validate a program document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ProgramSyntaxError(e.msg, f"line {e.lineno} column {e.colno}") from None
    p = program_from_document(doc)
    report = validate(p)
    if not report.ok:
        raise ValidationFailed(report)
    return p


# --------------------------------------------------------------------------
# reports


def outcome_key(values) -> str:
    return ",".join(str(bool(v)) for v in values) if values else "()"


def parse_outcome_key(key: str) -> tuple:
    if key == "()":
        return ()
    table = {"True": True, "False": False}
    try:
        return tuple(table[k] for k in key.split(","))
    except KeyError:
        raise ValueError(f"bad outcome key {key!r}") from None


def distribution_to_json(d: OutcomeDistribution) -> dict:
    return {outcome_key(k): num(v) for k, v in d.items()}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def parse_distribution(text: str) -> OutcomeDistribution:
    raw = json.loads(text)
    return OutcomeDistribution({parse_outcome_key(k): float(v) for k, v in sorted(raw.items())})


def _rate_json(r) -> dict:
    return {
        "errors": r.errors,
        "rate": num(r.rate),
        "ci_lo": num(r.ci_lo),
        "ci_hi": num(r.ci_hi),
        "tvd": num(r.tvd),
        "tallies": {outcome_key(k): v for k, v in r.tallies.items()},
    }


def report_to_json(rep) -> dict:
    return {
        "code": rep.code,
        "channel": rep.channel,
        "p": num(rep.p),
        "location": rep.location,
        "policy": rep.policy,
        "trials": rep.trials,
        "seed": rep.seed,
        "rng": rep.rng,
        "reference": {
            "modal": outcome_key(rep.modal),
            "deterministic": rep.deterministic,
            "distribution": distribution_to_json(rep.reference),
        },
        "plain": _rate_json(rep.plain),
        "encoded": _rate_json(rep.encoded),
        "notes": list(rep.notes),
    }


def report_to_csv(rep) -> str:
    row = {
        "code": rep.code, "channel": rep.channel, "p": num(rep.p), "location": rep.location,
        "policy": rep.policy, "trials": rep.trials,
        "plain_rate": num(rep.plain.rate), "plain_ci_lo": num(rep.plain.ci_lo),
        "plain_ci_hi": num(rep.plain.ci_hi),
        "encoded_rate": num(rep.encoded.rate), "encoded_ci_lo": num(rep.encoded.ci_lo),
        "encoded_ci_hi": num(rep.encoded.ci_hi), "seed": rep.seed,
    }
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerow(row)
    return buf.getvalue()


def read_report(text: str, fmt: str = "json") -> dict:
    """Load a report written by ``trials``; CSV numbers come back as floats/ints."""
    if fmt == "json":
        obj = json.loads(text)
        return obj.get("report", obj)
    rows = list(csv.DictReader(io.StringIO(text)))
    if len(rows) != 1 or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("not a trials CSV report")
    row = dict(rows[0])
    for k in ("trials", "seed"):
        row[k] = int(row[k])
    for k in CSV_COLUMNS:
        if k.endswith(("rate", "_lo", "_hi")) or k == "p":
            row[k] = float(row[k])
    return row
