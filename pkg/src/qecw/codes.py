"""Encoded qubits and the code catalog (bitflip3, phaseflip3, steane7).

Every code is described by a base encoding circuit taking the parent qubit
``q[0]`` (carrying the logical state) and ``n - 1`` fresh ``|0>`` qubits to a
codeword.  The encoding unitary actually used is::

    encode = invert(fixup) + base_encode

where ``fixup`` is a table of parent-qubit Paulis controlled by the
non-parent qubits.  On a clean input the non-parent qubits are all zero and
the fixup is the identity, so ``encode`` produces the same codewords as the
base circuit.  The payoff is in ``decode = invert(encode)``: decoding a
codeword hit by any single correctable error leaves the parent exact and
parks the error in the non-parent qubits, where re-encoding puts it back
untouched for the next correction round.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import CodeMismatch, OverlappingTuples, UnknownCode
from .ir import (
    EMPTY,
    H,
    PAULIS,
    X,
    Z,
    ApplyU,
    MeasQbit,
    MkQbit,
    Release,
    Rotation,
    Unitary,
    cnot,
    cond,
    invert,
    rot,
    seq_compose,
    swap,
    ulet,
)


class NameSupply:
    """Fresh identifiers that never collide with ``reserved``."""

    def __init__(self, reserved=(), prefix: str = ""):
        self.reserved = set(reserved)
        self.prefix = prefix
        self._counts: dict = {}

    def fresh(self, hint: str) -> str:
        while True:
            k = self._counts.get(hint, 0)
            self._counts[hint] = k + 1
            name = f"{self.prefix}{hint}{k}"
            if name not in self.reserved:
                self.reserved.add(name)
                return name


@dataclass(frozen=True)
class ProgramFragment:
    """Statements to splice into a program (never contains a return)."""

    stmts: tuple = ()
    binder: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "stmts", tuple(self.stmts))

    def __add__(self, other: ProgramFragment) -> ProgramFragment:
        return ProgramFragment(self.stmts + other.stmts, other.binder or self.binder)

    def __iter__(self):
        return iter(self.stmts)

    def __len__(self):
        return len(self.stmts)

    @classmethod
    def of_unitary(cls, u: Unitary) -> ProgramFragment:
        return cls((ApplyU(u),) if u.steps else ())


EMPTY_FRAGMENT = ProgramFragment()


class CodeScheme:
    def __init__(self, name: str, n: int, base_encode: Callable, correctable: tuple,
                 syndrome: Callable, transversal: Mapping[str, Callable] | None = None):
        self.name = name
        self.n = n
        self.base_encode = base_encode
        self.correctable = correctable  # ((pauli, position), ...)
        self._syndrome = syndrome
        self.transversal = dict(transversal or {})

    def __repr__(self):
        return f"CodeScheme({self.name!r}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, CodeScheme) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    @functools.cached_property
    def fixup_table(self) -> dict:
        return _fixup_table(self)

    def fixup(self, qubits) -> Unitary:
        parent = qubits[0]
        table = {pat: rot(parent, PAULIS[p]) for pat, p in self.fixup_table.items() if p != "I"}
        return pattern_table(list(qubits[1:]), table)

    def build_encode(self, qubits) -> Unitary:
        self._check(qubits)
        return invert(self.fixup(qubits)) + self.base_encode(tuple(qubits))

    def build_correction(self, qubits, supply: NameSupply | None = None,
                         reclaim: bool = True) -> ProgramFragment:
        """Syndrome extraction, table-driven Pauli fixes and syndrome disposal.

        With ``reclaim`` the syndrome qubits are measured and released; without
        it they are left allocated and the fragment is a single unitary.
        """
        self._check(qubits)
        supply = supply or NameSupply(qubits)
        extract, fix, ancillas = self._syndrome(tuple(qubits), supply)
        stmts: list = [MkQbit(False, a) for a in ancillas]
        stmts.append(ApplyU(extract + fix))
        if reclaim:
            stmts += [MeasQbit(a, supply.fresh("syn")) for a in ancillas]
            stmts += [Release(a) for a in ancillas]
        return ProgramFragment(stmts)

    def gate_class(self, r: Rotation) -> str | None:
        for cls, ref in (("X", X), ("Z", Z), ("H", H)):
            if cls in self.transversal and r.close_to(ref):
                return cls
        return None

    def _check(self, qubits):
        if len(qubits) != self.n:
            raise ValueError(f"{self.name} needs {self.n} qubits, got {len(qubits)}")
        if len(set(qubits)) != self.n:
            raise OverlappingTuples(f"repeated qubit in {qubits!r}")


@dataclass(frozen=True)
class EncodedQubit:
    code: CodeScheme = field(compare=True)
    qubits: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.qubits) != self.code.n or len(set(self.qubits)) != self.code.n:
            raise OverlappingTuples(f"bad {self.code.name} tuple {self.qubits!r}")

    @property
    def parent(self):
        return self.qubits[0]


def pattern_table(controls: list, table: Mapping[tuple, Unitary]) -> Unitary:
    """Nested conds applying ``table[bits]`` when ``controls`` read ``bits``."""
    if not table:
        return EMPTY
    if not controls:
        return table.get((), EMPTY)
    head, rest = controls[0], controls[1:]
    lo = {k[1:]: v for k, v in table.items() if not k[0]}
    hi = {k[1:]: v for k, v in table.items() if k[0]}
    return cond(head, pattern_table(rest, lo), pattern_table(rest, hi))


def _fixup_table(code: CodeScheme) -> dict:
    """Map each decoded non-parent pattern to the parent Pauli that undoes its error."""
    from .sim import alloc_qubit, apply_unitary, new_state

    ids = tuple(range(code.n))
    enc = code.base_encode(ids)
    dec = invert(enc)
    table: dict = {}
    for err in [None, *code.correctable]:
        outs = []
        for b in (False, True):
            s = new_state()
            for j in range(code.n):
                _, s = alloc_qubit(s, b if j == 0 else False)
            s = apply_unitary(s, enc)
            if err is not None:
                s = apply_unitary(s, rot(ids[err[1]], PAULIS[err[0]]))
            s = apply_unitary(s, dec)
            (key, amp), = [(k, a) for k, a in s.terms.items() if abs(a) > 1e-9]
            outs.append((key & 1, tuple(bool(key >> j & 1) for j in ids[1:]), amp))
        (p0, pat0, c0), (p1, pat1, c1) = outs
        if pat0 != pat1:
            raise ValueError(f"{code.name}: error {err} leaks the logical value into the syndrome")
        ratio = c1 / c0
        if (p0, p1) == (0, 1):
            pauli = "I" if abs(ratio - 1) < 1e-9 else "Z"
        else:
            pauli = "X" if abs(ratio - 1) < 1e-9 else "Y"
        if pauli in ("Z", "Y") and abs(ratio + 1) > 1e-9:
            raise ValueError(f"{code.name}: error {err} decodes to a non-Pauli action")
        if table.get(pat0, pauli) != pauli:
            raise ValueError(f"{code.name}: error {err} is indistinguishable from another")
        table[pat0] = pauli
    return table


# --------------------------------------------------------------------------
# bitflip3 / phaseflip3


def _bitflip_encode(q) -> Unitary:
    return cnot(q[0], q[1]) + cnot(q[0], q[2])


def _phaseflip_encode(q) -> Unitary:
    return _bitflip_encode(q) + _on_all(q, H)


def _on_all(q, r: Rotation) -> Unitary:
    return seq_compose(*(rot(x, r) for x in q))


def _bitflip_syndrome(q, supply):
    a1, a2 = supply.fresh("anc"), supply.fresh("anc")
    extract = cnot(q[0], a1) + cnot(q[1], a1) + cnot(q[0], a2) + cnot(q[2], a2)
    fix = pattern_table([a1, a2], {
        (True, True): rot(q[0], X),
        (True, False): rot(q[1], X),
        (False, True): rot(q[2], X),
    })
    return extract, fix, (a1, a2)


def _phaseflip_syndrome(q, supply):
    extract, fix, ancillas = _bitflip_syndrome(q, supply)
    hs = _on_all(q, H)
    return hs + extract, fix + hs, ancillas


# --------------------------------------------------------------------------
# steane7
#
# Hamming positions 1..7; tuple slot j holds position STEANE_POS[j] so that
# the parent (slot 0) is position 3, inside the weight-3 logical-X support
# {3, 5, 6}.  Positions 1, 2, 4 each belong to exactly one generator and
# serve as the |+> pivots of the encoder.

STEANE_POS = (3, 1, 2, 4, 5, 6, 7)
STEANE_GENERATORS = ((4, 5, 6, 7), (2, 3, 6, 7), (1, 3, 5, 7))
_PIVOTS = (4, 2, 1)


def _steane_slot(q, position):
    return q[STEANE_POS.index(position)]


def _steane_encode(q) -> Unitary:
    at = functools.partial(_steane_slot, q)
    u = cnot(at(3), at(5)) + cnot(at(3), at(6))
    for pivot in _PIVOTS:
        u = u + rot(at(pivot), H)
    for pivot, gen in zip(_PIVOTS, STEANE_GENERATORS):
        for pos in gen:
            if pos != pivot:
                u = u + cnot(at(pivot), at(pos))
    return u


def _steane_syndrome(q, supply):
    at = functools.partial(_steane_slot, q)
    zs = [supply.fresh("anc") for _ in STEANE_GENERATORS]
    xs = [supply.fresh("anc") for _ in STEANE_GENERATORS]
    extract = EMPTY
    for a, gen in zip(zs, STEANE_GENERATORS):
        for pos in gen:
            extract = extract + cnot(at(pos), a)
    for a, gen in zip(xs, STEANE_GENERATORS):
        extract = extract + rot(a, H)
        for pos in gen:
            extract = extract + cnot(a, at(pos))
        extract = extract + rot(a, H)
    # generator rows are the binary digits of the flipped position, MSB first
    bits = list(itertools.product((False, True), repeat=3))
    x_fix = {b: rot(at(4 * b[0] + 2 * b[1] + b[2]), X) for b in bits if any(b)}
    z_fix = {b: rot(at(4 * b[0] + 2 * b[1] + b[2]), Z) for b in bits if any(b)}
    fix = pattern_table(zs, x_fix) + pattern_table(xs, z_fix)
    return extract, fix, tuple(zs + xs)


def _transversal(r: Rotation):
    return lambda q: _on_all(q, r)


def _single(paulis, n):
    return tuple((p, j) for j in range(n) for p in paulis)


CATALOG = {
    "bitflip3": lambda: CodeScheme(
        "bitflip3", 3, _bitflip_encode, _single("X", 3), _bitflip_syndrome,
        {"X": _transversal(X)},
    ),
    "phaseflip3": lambda: CodeScheme(
        "phaseflip3", 3, _phaseflip_encode, _single("Z", 3), _phaseflip_syndrome,
        # logical Z of |+++>, |---> is X on every qubit
        {"Z": _transversal(X)},
    ),
    "steane7": lambda: CodeScheme(
        "steane7", 7, _steane_encode, _single("XYZ", 7), _steane_syndrome,
        {"X": _transversal(X), "Z": _transversal(Z), "H": _transversal(H)},
    ),
}

CODE_NAMES = tuple(CATALOG)


@functools.lru_cache(maxsize=None)
def get_code(name: str) -> CodeScheme:
    try:
        return CATALOG[name]()
    except KeyError:
        raise UnknownCode(f"unknown code {name!r}; expected one of {', '.join(CATALOG)}") from None


# --------------------------------------------------------------------------
# encoded-qubit operations


def mk_encoded(code: CodeScheme, init: bool, names=None,
               supply: NameSupply | None = None) -> tuple[EncodedQubit, ProgramFragment]:
    if names is None:
        supply = supply or NameSupply()
        names = [supply.fresh("q") for _ in range(code.n)]
    eq = EncodedQubit(code, tuple(names))
    stmts = [MkQbit(bool(init) if j == 0 else False, name) for j, name in enumerate(eq.qubits)]
    stmts.append(ApplyU(encode_unitary(eq)))
    return eq, ProgramFragment(stmts)


def parent_of(eq: EncodedQubit):
    return eq.qubits[0]


def encode_unitary(eq: EncodedQubit) -> Unitary:
    return eq.code.build_encode(eq.qubits)


def decode_unitary(eq: EncodedQubit) -> Unitary:
    return invert(encode_unitary(eq))


def correction_fragment(eq: EncodedQubit, supply: NameSupply | None = None,
                        reclaim: bool = True) -> ProgramFragment:
    return eq.code.build_correction(eq.qubits, supply or NameSupply(eq.qubits), reclaim)


def measure_encoded(eq: EncodedQubit, binder: str) -> ProgramFragment:
    return ProgramFragment(
        (ApplyU(decode_unitary(eq)), MeasQbit(eq.parent, binder), ApplyU(encode_unitary(eq))),
        binder,
    )


def lifted_rot(eq: EncodedQubit, r: Rotation, transversal: bool = True) -> Unitary:
    if transversal:
        cls = eq.code.gate_class(r)
        if cls is not None:
            return eq.code.transversal[cls](eq.qubits)
    return decode_unitary(eq) + rot(eq.parent, r) + encode_unitary(eq)


def lifted_swap(a: EncodedQubit, b: EncodedQubit) -> Unitary:
    if a.code != b.code:
        raise CodeMismatch(f"cannot swap a {a.code.name} qubit with a {b.code.name} qubit")
    if set(a.qubits) & set(b.qubits):
        raise OverlappingTuples("swapped encoded qubits share physical qubits")
    return seq_compose(*(swap(x, y) for x, y in zip(a.qubits, b.qubits)))


def lifted_ulet(code: CodeScheme, init: bool, body: Callable[[EncodedQubit], Unitary],
                names=None, supply: NameSupply | None = None) -> Unitary:
    """Scoped encoded ancilla: ``n`` nested ulets around encode; body; decode.

    Each nested ulet checks its own physical qubit on exit, so a body that
    leaves the logical ancilla changed fails with ``AncillaNotReturned``.
    """
    if names is None:
        supply = supply or NameSupply()
        names = [supply.fresh("t") for _ in range(code.n)]
    eq = EncodedQubit(code, tuple(names))
    u = encode_unitary(eq) + body(eq) + decode_unitary(eq)
    for j in reversed(range(code.n)):
        u = ulet(bool(init) if j == 0 else False, eq.qubits[j], u)
    return u
