"""First-order program representation.

A program is a flat list of statements.  Qubits are referred to by name
(bound by ``MkQbit`` or by a ``Ulet`` inside a unitary) or, for circuits
built directly against a simulator state, by integer qubit id.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import NotUnitary, ShadowedBinder

Ref = Union[str, int]

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

UNITARITY_TOL = 1e-9


@dataclass(frozen=True)
class Rotation:
    """Arbitrary single-qubit unitary, stored row-major."""

    m00: complex
    m01: complex
    m10: complex
    m11: complex
    label: str | None = field(default=None, compare=False)
    theta: float | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("m00", "m01", "m10", "m11"):
            v = complex(getattr(self, name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise NotUnitary(f"non-finite matrix entry {name}={v}")
            object.__setattr__(self, name, v)
        a, b, c, d = self.m00, self.m01, self.m10, self.m11
        # M M^dagger == I
        prod = (
            a * a.conjugate() + b * b.conjugate(),
            a * c.conjugate() + b * d.conjugate(),
            c * c.conjugate() + d * d.conjugate(),
        )
        if abs(prod[0] - 1) > UNITARITY_TOL or abs(prod[1]) > UNITARITY_TOL or abs(prod[2] - 1) > UNITARITY_TOL:
            raise NotUnitary(f"matrix [[{a}, {b}], [{c}, {d}]] is not unitary")

    @property
    def entries(self) -> tuple[complex, complex, complex, complex]:
        return (self.m00, self.m01, self.m10, self.m11)

    def dagger(self) -> Rotation:
        label, theta = self.label, self.theta
        if label == "phase" and theta is not None:
            theta = -theta
        elif label not in SELF_INVERSE:
            label = None
        return Rotation(
            self.m00.conjugate(), self.m10.conjugate(), self.m01.conjugate(), self.m11.conjugate(),
            label=label, theta=theta,
        )

    def close_to(self, other: Rotation, tol: float = 1e-12) -> bool:
        return all(abs(x - y) <= tol for x, y in zip(self.entries, other.entries))

    def __repr__(self):
        if self.label == "phase":
            return f"phase({self.theta!r})"
        if self.label:
            return self.label.upper()
        return f"Rotation{self.entries!r}"


SELF_INVERSE = {"x", "y", "z", "h", "i"}

_R2 = 1 / math.sqrt(2)
I = Rotation(1, 0, 0, 1, label="i")
X = Rotation(0, 1, 1, 0, label="x")
Y = Rotation(0, -1j, 1j, 0, label="y")
Z = Rotation(1, 0, 0, -1, label="z")
H = Rotation(_R2, _R2, _R2, -_R2, label="h")
S = Rotation(1, 0, 0, 1j, label="s")
PAULIS = {"X": X, "Y": Y, "Z": Z}


def phase(theta: float) -> Rotation:
    return Rotation(1, 0, 0, cmath.exp(1j * theta), label="phase", theta=float(theta))


# --------------------------------------------------------------------------
# unitaries


@dataclass(frozen=True)
class Rot:
    target: Ref
    r: Rotation


@dataclass(frozen=True)
class Swap:
    a: Ref
    b: Ref


@dataclass(frozen=True)
class Cond:
    control: Ref
    when_false: Unitary
    when_true: Unitary


@dataclass(frozen=True)
class Ulet:
    init: bool
    binder: str
    body: Unitary


GateStep = Union[Rot, Swap, Cond, Ulet]


@dataclass(frozen=True)
class Unitary:
    """An invertible sequence of gate steps; ``+`` is sequential composition."""

    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __add__(self, other: Unitary) -> Unitary:
        if not isinstance(other, Unitary):
            return NotImplemented
        if not other.steps:
            return self
        if not self.steps:
            return other
        return Unitary(self.steps + other.steps)

    def __iter__(self) -> Iterator[GateStep]:
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def __bool__(self):
        return bool(self.steps)


EMPTY = Unitary()


def seq_compose(*us: Unitary) -> Unitary:
    out: list = []
    for u in us:
        out.extend(u.steps)
    return Unitary(tuple(out))


def rot(target: Ref, r: Rotation) -> Unitary:
    return Unitary((Rot(target, r),))


def swap(a: Ref, b: Ref) -> Unitary:
    return Unitary((Swap(a, b),))


def cond(control: Ref, when_false: Unitary = EMPTY, when_true: Unitary = EMPTY) -> Unitary:
    return Unitary((Cond(control, when_false, when_true),))


def ulet(init: bool, binder: str, body: Unitary) -> Unitary:
    return Unitary((Ulet(bool(init), binder, body),))


def unot(q: Ref) -> Unitary:
    return rot(q, X)


def cnot(control: Ref, target: Ref) -> Unitary:
    return cond(control, EMPTY, rot(target, X))


def toffoli(c1: Ref, c2: Ref, target: Ref) -> Unitary:
    return cond(c1, EMPTY, cnot(c2, target))


def invert(u: Unitary) -> Unitary:
    out = []
    for step in reversed(u.steps):
        if isinstance(step, Rot):
            out.append(Rot(step.target, step.r.dagger()))
        elif isinstance(step, Swap):
            out.append(step)
        elif isinstance(step, Cond):
            out.append(Cond(step.control, invert(step.when_false), invert(step.when_true)))
        else:
            out.append(Ulet(step.init, step.binder, invert(step.body)))
    return Unitary(tuple(out))


def substitute(u: Unitary, binder: str, q: Ref) -> Unitary:
    """Replace every free reference to ``binder`` in ``u`` by ``q``."""

    def sub(r):
        return q if r == binder else r

    out = []
    for step in u.steps:
        if isinstance(step, Rot):
            out.append(Rot(sub(step.target), step.r))
        elif isinstance(step, Swap):
            out.append(Swap(sub(step.a), sub(step.b)))
        elif isinstance(step, Cond):
            out.append(Cond(sub(step.control), substitute(step.when_false, binder, q),
                            substitute(step.when_true, binder, q)))
        else:
            if step.binder == binder:
                raise ShadowedBinder(f"binder {binder!r} is rebound by a nested ulet")
            out.append(Ulet(step.init, step.binder, substitute(step.body, binder, q)))
    return Unitary(tuple(out))


def free_refs(u: Unitary) -> set:
    """Qubit references used by ``u`` that are not bound by one of its own ulets."""
    found: set = set()
    _collect(u, frozenset(), found)
    return found


def _collect(u: Unitary, bound: frozenset, found: set) -> None:
    for step in u.steps:
        if isinstance(step, Rot):
            refs: tuple = (step.target,)
        elif isinstance(step, Swap):
            refs = (step.a, step.b)
        elif isinstance(step, Cond):
            refs = (step.control,)
            _collect(step.when_false, bound, found)
            _collect(step.when_true, bound, found)
        else:
            _collect(step.body, bound | {step.binder}, found)
            continue
        found.update(r for r in refs if r not in bound)


def gate_count(u: Unitary) -> int:
    n = 0
    for step in u.steps:
        if isinstance(step, Cond):
            n += 1 + gate_count(step.when_false) + gate_count(step.when_true)
        elif isinstance(step, Ulet):
            n += 1 + gate_count(step.body)
        else:
            n += 1
    return n


# --------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class MkQbit:
    init: bool
    binder: str


@dataclass(frozen=True)
class ApplyU:
    u: Unitary


@dataclass(frozen=True)
class MeasQbit:
    target: Ref
    binder: str


@dataclass(frozen=True)
class Release:
    """Free a qubit that is known to sit in a basis state (e.g. right after measurement)."""

    target: Ref


@dataclass(frozen=True)
class Noise:
    """Stochastic Pauli channel marker; only meaningful to sampled evaluation."""

    channel: str
    p: float
    targets: tuple

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))


@dataclass(frozen=True)
class Return:
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))


Statement = Union[MkQbit, ApplyU, MeasQbit, Release, Noise, Return]


@dataclass(frozen=True)
class QProgram:
    stmts: tuple

    def __post_init__(self):
        object.__setattr__(self, "stmts", tuple(self.stmts))

    def __iter__(self):
        return iter(self.stmts)

    def __len__(self):
        return len(self.stmts)

    @property
    def arity(self) -> int:
        last = self.stmts[-1] if self.stmts else None
        return len(last.names) if isinstance(last, Return) else 0


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    detail: str

    def __str__(self):
        return f"[{self.index}] {self.kind}: {self.detail}"

    def to_dict(self):
        return {"kind": self.kind, "index": self.index, "detail": self.detail}


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> list:
        return [v.kind for v in self.violations]

    def add(self, kind, index, detail):
        self.violations.append(Violation(kind, index, detail))


def validate(p: QProgram) -> ValidationReport:
    report = ValidationReport()
    live: set = set()  # allocated qubit names
    ever_bound: set = set()
    measured: set = set()
    n = len(p.stmts)
    returns = [i for i, s in enumerate(p.stmts) if isinstance(s, Return)]
    if not returns:
        report.add("MissingReturn", n, "program has no return statement")
    elif len(returns) > 1:
        for i in returns[1:]:
            report.add("MultipleReturn", i, "return appears more than once")
    if returns and returns[0] != n - 1:
        report.add("ReturnNotLast", returns[0], "return must be the final statement")

    def bind(name, i, what):
        if not isinstance(name, str) or not NAME_RE.match(name):
            report.add("InvalidName", i, f"{what} binder {name!r} is not a valid name")
        elif name in ever_bound:
            report.add("DuplicateBinder", i, f"name {name!r} is bound twice")
        ever_bound.add(name)

    def use(ref, i):
        if ref not in live:
            report.add("UnboundName", i, f"qubit {ref!r} is not allocated here")

    for i, s in enumerate(p.stmts):
        if isinstance(s, MkQbit):
            bind(s.binder, i, "qubit")
            live.add(s.binder)
        elif isinstance(s, ApplyU):
            _check_unitary(s.u, i, live, ever_bound, report, ())
        elif isinstance(s, MeasQbit):
            use(s.target, i)
            if s.binder in measured:
                report.add("DuplicateBinder", i, f"measurement binder {s.binder!r} reused")
            bind(s.binder, i, "measurement")
            measured.add(s.binder)
        elif isinstance(s, Release):
            use(s.target, i)
            live.discard(s.target)
        elif isinstance(s, Noise):
            if s.channel not in ("bit_flip", "phase_flip", "depolarizing"):
                report.add("BadNoise", i, f"unknown channel {s.channel!r}")
            if not 0.0 <= s.p <= 1.0:
                report.add("BadNoise", i, f"probability {s.p} outside [0, 1]")
            for t in s.targets:
                use(t, i)
        elif isinstance(s, Return):
            for name in s.names:
                if name not in measured:
                    report.add("UnboundName", i, f"return references unmeasured name {name!r}")
        else:
            report.add("UnknownStatement", i, f"unrecognised statement {s!r}")
    return report


def _check_unitary(u, i, live, ever_bound, report, locals_):
    def use(ref):
        if ref not in live and ref not in locals_:
            report.add("UnboundName", i, f"qubit {ref!r} is not in scope")

    for step in u.steps:
        if isinstance(step, Rot):
            use(step.target)
        elif isinstance(step, Swap):
            use(step.a)
            use(step.b)
            if step.a == step.b:
                report.add("SwapSameQubit", i, f"swap of {step.a!r} with itself")
        elif isinstance(step, Cond):
            use(step.control)
            for branch in (step.when_false, step.when_true):
                if _mentions(branch, step.control):
                    report.add("ControlTouchedByBranch", i,
                               f"a branch of cond on {step.control!r} acts on the control")
                _check_unitary(branch, i, live, ever_bound, report, locals_)
        elif isinstance(step, Ulet):
            b = step.binder
            if not isinstance(b, str) or not NAME_RE.match(b):
                report.add("InvalidName", i, f"ulet binder {b!r} is not a valid name")
            elif b in live or b in ever_bound or b in locals_:
                report.add("ShadowedBinder", i, f"ulet binder {b!r} shadows an existing name")
            _check_unitary(step.body, i, live, ever_bound, report, locals_ + (b,))
        else:
            report.add("UnknownGate", i, f"unrecognised gate step {step!r}")


def _mentions(u: Unitary, ref) -> bool:
    for step in u.steps:
        if isinstance(step, Rot) and step.target == ref:
            return True
        if isinstance(step, Swap) and ref in (step.a, step.b):
            return True
        if isinstance(step, Cond):
            if step.control == ref or _mentions(step.when_false, ref) or _mentions(step.when_true, ref):
                return True
        if isinstance(step, Ulet) and step.binder != ref and _mentions(step.body, ref):
            return True
    return False
