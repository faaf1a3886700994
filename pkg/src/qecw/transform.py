"""Rewrite a program over logical qubits into one over encoded qubits.

The pass walks the statements once, threading a register of the encoded
qubits created so far (most recent first):

* ``MkQbit``   -> allocate and encode a code block, push it on the register
* ``ApplyU``   -> each gate step becomes its encoded counterpart, followed by
  a correction round over the whole register (subject to the policy)
* ``MeasQbit`` -> decode, measure the parent, re-encode
* ``Return``   -> unchanged
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .codes import (
    EMPTY_FRAGMENT,
    CodeScheme,
    EncodedQubit,
    NameSupply,
    ProgramFragment,
    correction_fragment,
    decode_unitary,
    encode_unitary,
    lifted_rot,
    lifted_swap,
    lifted_ulet,
    measure_encoded,
    mk_encoded,
)
from .errors import UnknownQubit, ValidationFailed
from .ir import (
    EMPTY,
    ApplyU,
    Cond,
    MeasQbit,
    MkQbit,
    Noise,
    QProgram,
    Release,
    Return,
    Rot,
    Swap,
    Ulet,
    Unitary,
    cond,
    validate,
)


@dataclass(frozen=True)
class Policy:
    """How often correction rounds are inserted: every ``k`` lifted ops, or never (k=0)."""

    k: int = 1

    @classmethod
    def parse(cls, text: str) -> Policy:
        if text in ("after-each-op", "always"):
            return cls(1)
        if text == "never":
            return cls(0)
        m = re.fullmatch(r"every-k:(\d+)", text)
        if m and int(m.group(1)) > 0:
            return cls(int(m.group(1)))
        raise ValueError(f"bad correction policy {text!r} (after-each-op | every-k:K | never)")

    def due(self, ops_done: int) -> bool:
        return self.k > 0 and ops_done % self.k == 0

    def __str__(self):
        if self.k == 1:
            return "after-each-op"
        return "never" if self.k == 0 else f"every-k:{self.k}"


AFTER_EACH_OP = Policy(1)


def lookup_encoded(q, reg) -> EncodedQubit:
    for eq in reg:
        if eq.parent == q:
            return eq
    raise UnknownQubit(f"no encoded qubit has parent {q!r}")


def correct_all(reg, supply: NameSupply | None = None, reclaim: bool = True) -> ProgramFragment:
    supply = supply or NameSupply(q for eq in reg for q in eq.qubits)
    out = EMPTY_FRAGMENT
    for eq in reg:
        out = out + correction_fragment(eq, supply, reclaim)
    return out


@dataclass(frozen=True)
class Boundary:
    """A point between spliced fragments, with the data qubits live there."""

    index: int
    data: tuple
    after_op: bool = False


@dataclass
class Transformed:
    program: QProgram
    boundaries: list = field(default_factory=list)
    register: list = field(default_factory=list)

    @property
    def op_ends(self) -> list:
        return [b for b in self.boundaries if b.after_op]


class _Lifter:
    def __init__(self, code: CodeScheme, supply: NameSupply):
        self.code = code
        self.supply = supply

    def lift(self, u: Unitary, scope: dict, in_branch: bool = False) -> Unitary:
        out = EMPTY
        for step in u.steps:
            out = out + self.lift_step(step, scope, in_branch)
        return out

    def lift_step(self, step, scope: dict, in_branch: bool) -> Unitary:
        if isinstance(step, Rot):
            # transversal gates kick error phases back onto a decoded control
            return lifted_rot(self.find(step.target, scope), step.r, transversal=not in_branch)
        if isinstance(step, Swap):
            return lifted_swap(self.find(step.a, scope), self.find(step.b, scope))
        if isinstance(step, Cond):
            eq = self.find(step.control, scope)
            return (
                decode_unitary(eq)
                + cond(eq.parent, self.lift(step.when_false, scope, True),
                       self.lift(step.when_true, scope, True))
                + encode_unitary(eq)
            )
        if isinstance(step, Ulet):
            names = [step.binder] + [self.supply.fresh(f"{step.binder}_e") for _ in range(self.code.n - 1)]

            def body(tmp: EncodedQubit) -> Unitary:
                return self.lift(step.body, {**scope, step.binder: tmp}, in_branch)

            return lifted_ulet(self.code, step.init, body, names=names)
        raise TypeError(f"unknown gate step {step!r}")

    @staticmethod
    def find(q, scope: dict) -> EncodedQubit:
        try:
            return scope[q]
        except KeyError:
            raise UnknownQubit(f"qubit {q!r} was never created by mkqbit in this program") from None


def extend_unitary(u: Unitary, reg, supply: NameSupply | None = None,
                   policy: Policy = AFTER_EACH_OP, reclaim: bool = True) -> ProgramFragment:
    """Encoded version of ``u`` with a correction round after each step, as the policy allows."""
    reg = list(reg)
    if not reg and u.steps:
        raise UnknownQubit("empty register")
    supply = supply or NameSupply(q for eq in reg for q in eq.qubits)
    lifter = _Lifter(reg[0].code if reg else None, supply)
    scope = {eq.parent: eq for eq in reversed(reg)}
    out = EMPTY_FRAGMENT
    for i, step in enumerate(u.steps, 1):
        out = out + ProgramFragment.of_unitary(lifter.lift_step(step, scope, False))
        if policy.due(i):
            out = out + correct_all(reg, supply, reclaim)
    return out


def _all_names(p: QProgram) -> set:
    names: set = set()

    def walk(u):
        for step in u.steps:
            if isinstance(step, Rot):
                names.add(step.target)
            elif isinstance(step, Swap):
                names.update((step.a, step.b))
            elif isinstance(step, Cond):
                names.add(step.control)
                walk(step.when_false)
                walk(step.when_true)
            else:
                names.add(step.binder)
                walk(step.body)

    for s in p.stmts:
        if isinstance(s, (MkQbit, MeasQbit)):
            names.add(s.binder)
        if isinstance(s, (MeasQbit, Release)):
            names.add(s.target)
        if isinstance(s, ApplyU):
            walk(s.u)
        if isinstance(s, Noise):
            names.update(s.targets)
        if isinstance(s, Return):
            names.update(s.names)
    return {n for n in names if isinstance(n, str)}


def transform_traced(p: QProgram, code: CodeScheme, policy: Policy | str = AFTER_EACH_OP,
                     reclaim: bool = True) -> Transformed:
    if isinstance(policy, str):
        policy = Policy.parse(policy)
    report = validate(p)
    if not report.ok:
        raise ValidationFailed(report)
    supply = NameSupply(_all_names(p))
    lifter = _Lifter(code, supply)
    reg: list = []  # most recent first
    out: list = []
    marks: dict = {}
    ops = 0

    def mark(after_op=False):
        prev = marks.get(len(out))
        data = tuple(q for eq in reversed(reg) for q in eq.qubits)
        marks[len(out)] = Boundary(len(out), data, after_op or (prev is not None and prev.after_op))

    def splice(frag):
        mark()
        out.extend(frag.stmts)

    for s in p.stmts:
        if isinstance(s, MkQbit):
            names = [s.binder] + [supply.fresh(f"{s.binder}_e") for _ in range(code.n - 1)]
            eq, frag = mk_encoded(code, s.init, names)
            splice(frag)
            reg.insert(0, eq)
        elif isinstance(s, ApplyU):
            scope = {eq.parent: eq for eq in reversed(reg)}
            for step in s.u.steps:
                splice(ProgramFragment.of_unitary(lifter.lift_step(step, scope, False)))
                ops += 1
                mark(after_op=True)
                if policy.due(ops) and reg:
                    splice(correct_all(reg, supply, reclaim))
        elif isinstance(s, MeasQbit):
            splice(measure_encoded(lookup_encoded(s.target, reg), s.binder))
        elif isinstance(s, Release):
            eq = lookup_encoded(s.target, reg)
            splice(ProgramFragment((ApplyU(decode_unitary(eq)),) + tuple(Release(q) for q in eq.qubits)))
            reg.remove(eq)
        elif isinstance(s, Noise):
            targets = tuple(q for t in s.targets for q in lookup_encoded(t, reg).qubits)
            splice(ProgramFragment((Noise(s.channel, s.p, targets),)))
        elif isinstance(s, Return):
            mark()
            out.append(s)
    boundaries = [marks[i] for i in sorted(marks)]
    return Transformed(QProgram(out), boundaries, reg)


def transform(p: QProgram, code: CodeScheme, policy: Policy | str = AFTER_EACH_OP,
              reclaim: bool = True) -> QProgram:
    return transform_traced(p, code, policy, reclaim).program
