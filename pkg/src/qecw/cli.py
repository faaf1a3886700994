"""Command-line front end.

    qecw sim PROGRAM [--code C]          exact outcome distribution
    qecw run PROGRAM [--seed N]          one sampled result
    qecw transform PROGRAM --code C      encoded program document
    qecw trials PROGRAM --code C --noise CH --p P ...
    qecw example NAME                    dump a built-in program

PROGRAM is a path, ``-`` for stdin, or ``builtin:NAME``.
Exit status: 0 success, 1 invalid input, 2 simulation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import corpus, formats
from .codes import CODE_NAMES, get_code
from .errors import QecwError, SimulationError
from .noise import CHANNELS, LOCATIONS, NoiseSpec, estimate_logical_error_rate
from .sim import evaluate_exact, evaluate_run
from .transform import Policy, transform


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _policy(text):
    try:
        return Policy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _prob(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a probability")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qecw", description="Encode, simulate and stress quantum programs.")
    ap.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p, code_required=False):
        p.add_argument("program", help="program file, '-' for stdin, or builtin:NAME")
        p.add_argument("--code", choices=CODE_NAMES, required=code_required,
                       help="encode the program with this code first")
        p.add_argument("--policy", type=_policy, default=Policy(1),
                       help="after-each-op | every-k:K | never")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS)

    common(sub.add_parser("sim", help="exact outcome distribution"))
    run = sub.add_parser("run", help="one seeded sampled execution")
    common(run)
    run.add_argument("--seed", type=int)

    common(sub.add_parser("transform", help="write the error-corrected program"), code_required=True)

    tr = sub.add_parser("trials", help="Monte Carlo comparison of plain vs encoded")
    common(tr, code_required=True)
    tr.add_argument("--noise", choices=CHANNELS, required=True)
    tr.add_argument("--p", type=_prob, default=0.0)
    tr.add_argument("--location", choices=LOCATIONS, default="per_fragment_boundary")
    tr.add_argument("--trials", type=int, default=1000)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--format", choices=("json", "csv"), default="json")
    tr.add_argument("--workers", type=int, default=1)
    tr.add_argument("--timing", action="store_true", help="add a metadata block with wall time")

    ex = sub.add_parser("example", help="print a built-in program document")
    ex.add_argument("name", choices=sorted({**corpus.CORPUS, **corpus.EXTRA}))
    ex.add_argument("--out")
    ex.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS)
    return ap


def load_program(spec: str):
    if spec.startswith("builtin:"):
        return corpus.get_program(spec[len("builtin:"):])
    if spec == "-":
        return formats.parse_program(sys.stdin.buffer.read())
    with open(spec, "rb") as f:
        return formats.parse_program(f.read())


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("QECW_SEED", "0"))


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _prepared(args):
    p = load_program(args.program)
    if getattr(args, "code", None):
        p = transform(p, get_code(args.code), args.policy)
    return p


def cmd_sim(args) -> int:
    dist = evaluate_exact(_prepared(args))
    _emit(formats.dumps(formats.distribution_to_json(dist)), args.out)
    return 0


def cmd_run(args) -> int:
    seed = _seed(args)
    result = evaluate_run(_prepared(args), seed)
    _emit(formats.dumps({"result": formats.outcome_key(result), "seed": seed}), args.out)
    return 0


def cmd_transform(args) -> int:
    _emit(formats.serialize_program(_prepared(args)), args.out)
    return 0


def cmd_trials(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    p = load_program(args.program)
    spec = NoiseSpec(args.noise, args.p, args.location)
    t0 = time.perf_counter()
    rep = estimate_logical_error_rate(p, spec, args.trials, _seed(args), args.code, args.policy,
                                      workers=args.workers)
    elapsed = time.perf_counter() - t0
    if args.format == "csv":
        text = formats.report_to_csv(rep)
    else:
        payload = {"report": formats.report_to_json(rep)}
        if args.timing:
            payload["metadata"] = {"elapsed_seconds": round(elapsed, 3)}
        text = formats.dumps(payload)
    _emit(text, args.out)
    return 0


def cmd_example(args) -> int:
    _emit(formats.serialize_program(corpus.get_program(args.name)), args.out)
    return 0


COMMANDS = {"sim": cmd_sim, "run": cmd_run, "transform": cmd_transform,
            "trials": cmd_trials, "example": cmd_example}


def _fail(err: dict, json_errors: bool, status: int) -> int:
    if json_errors:
        sys.stderr.write(json.dumps(err) + "\n")
    else:
        sys.stderr.write(f"qecw: {err['error']}: {err['message']}\n")
    return status


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.cmd](args)
    except UsageError as e:
        return _fail({"error": "UsageError", "message": str(e)}, json_errors, 1)
    except SimulationError as e:
        return _fail(e.to_dict(), json_errors, 2)
    except QecwError as e:
        return _fail(e.to_dict(), json_errors, 1)
    except (OSError, KeyError, ValueError) as e:
        return _fail({"error": type(e).__name__, "message": str(e)}, json_errors, 1)


if __name__ == "__main__":
    sys.exit(main())
