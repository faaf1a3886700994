"""Sparse state-vector simulation.

Basis states are integer bitmasks where bit ``q`` holds the value of the
qubit with id ``q``.  Ids come from a monotone counter and are never
reused, so allocating or releasing a qubit never renumbers another one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    AncillaNotReturned,
    MismatchedRegisters,
    StochasticNoisePresent,
    UnallocatedQubit,
    UnboundName,
)
from .ir import (
    ApplyU,
    Cond,
    MeasQbit,
    MkQbit,
    Noise,
    PAULIS,
    QProgram,
    Release,
    Return,
    Rot,
    Rotation,
    Swap,
    Ulet,
    Unitary,
)

PRUNE = 1e-12
# Squared mass below which a misbehaving ancilla component counts as float drift.
ANCILLA_TOL = 1e-9

RNG_NAME = "pcg64-seedsequence/v1"


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Deterministic generator for ``seed``; ``path`` selects an independent child stream."""
    if seed < 0 or any(p < 0 for p in path):
        raise ValueError("seeds must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(path))))


@dataclass(frozen=True)
class StateVector:
    terms: Mapping[int, complex]
    allocated: tuple = ()
    next_id: int = 0

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def basis(self, key: int) -> dict:
        """Expand a bitmask key into a {qubit id: bool} assignment."""
        return {q: bool(key >> q & 1) for q in self.allocated}

    def amplitude(self, bits: Mapping[int, bool]) -> complex:
        key = 0
        for q, b in bits.items():
            if b:
                key |= 1 << q
        return self.terms.get(key, 0j)

    def to_dense(self, order=None) -> np.ndarray:
        """Dense vector with ``order[0]`` as the most significant qubit."""
        order = list(self.allocated if order is None else order)
        if sorted(order) != sorted(self.allocated):
            raise MismatchedRegisters("order must list exactly the allocated qubits")
        n = len(order)
        vec = np.zeros(2**n, dtype=complex)
        for key, a in self.terms.items():
            idx = 0
            for q in order:
                idx = (idx << 1) | (key >> q & 1)
            vec[idx] += a
        return vec

    def __len__(self):
        return len(self.terms)


def new_state() -> StateVector:
    return StateVector({0: 1 + 0j}, (), 0)


def from_dense(vec, qubits) -> StateVector:
    """Inverse of :meth:`StateVector.to_dense` for fresh ids ``qubits``."""
    qubits = list(qubits)
    terms = {}
    n = len(qubits)
    for idx, a in enumerate(np.asarray(vec, dtype=complex)):
        if abs(a) < PRUNE:
            continue
        key = 0
        for pos, q in enumerate(qubits):
            if idx >> (n - 1 - pos) & 1:
                key |= 1 << q
        terms[key] = complex(a)
    return StateVector(terms, tuple(qubits), max(qubits, default=-1) + 1)


def norm(state: StateVector) -> float:
    return state.norm()


def fidelity(a: StateVector, b: StateVector) -> float:
    if set(a.allocated) != set(b.allocated):
        raise MismatchedRegisters(f"{sorted(a.allocated)} vs {sorted(b.allocated)}")
    small, big = (a.terms, b.terms) if len(a.terms) <= len(b.terms) else (b.terms, a.terms)
    ip = sum(v.conjugate() * big.get(k, 0j) for k, v in small.items())
    return min(1.0, abs(ip) ** 2)


# --------------------------------------------------------------------------
# mutable evaluation context


class _Ctx:
    __slots__ = ("allocated", "next_id")

    def __init__(self, allocated, next_id):
        self.allocated = dict.fromkeys(allocated)
        self.next_id = next_id

    def copy(self):
        return _Ctx(self.allocated, self.next_id)

    def fresh(self) -> int:
        q = self.next_id
        self.next_id += 1
        self.allocated[q] = None
        return q


def _resolve(ref, env, ctx) -> int:
    if isinstance(ref, str):
        try:
            q = env[ref]
        except KeyError:
            raise UnboundName(f"name {ref!r} is not bound") from None
    else:
        q = ref
    if q not in ctx.allocated:
        raise UnallocatedQubit(f"qubit {ref!r} (id {q}) is not allocated")
    return q


def _rot(terms: dict, mask: int, r: Rotation) -> dict:
    a, b, c, d = r.entries
    if b == 0 and c == 0:
        if a == 1 and d == 1:
            return terms
        return {k: v * (d if k & mask else a) for k, v in terms.items()}
    if a == 0 and d == 0:
        # |0> -> c|1>, |1> -> b|0>
        return {k ^ mask: v * (b if k & mask else c) for k, v in terms.items()}
    out: dict = {}
    get = out.get
    for k, v in terms.items():
        if k & mask:
            k0 = k ^ mask
            out[k0] = get(k0, 0j) + b * v
            out[k] = get(k, 0j) + d * v
        else:
            k1 = k | mask
            out[k] = get(k, 0j) + a * v
            out[k1] = get(k1, 0j) + c * v
    return {k: v for k, v in out.items() if abs(v) >= PRUNE}


def _apply(terms: dict, u: Unitary, env: Mapping, ctx: _Ctx) -> dict:
    for step in u.steps:
        if isinstance(step, Rot):
            q = _resolve(step.target, env, ctx)
            terms = _rot(terms, 1 << q, step.r)
        elif isinstance(step, Swap):
            qa = _resolve(step.a, env, ctx)
            qb = _resolve(step.b, env, ctx)
            both = (1 << qa) | (1 << qb)
            terms = {
                (k ^ both if (k >> qa ^ k >> qb) & 1 else k): v for k, v in terms.items()
            }
        elif isinstance(step, Cond):
            q = _resolve(step.control, env, ctx)
            mask = 1 << q
            lo = {k: v for k, v in terms.items() if not k & mask}
            hi = {k: v for k, v in terms.items() if k & mask}
            if lo and step.when_false.steps:
                lo = _apply(lo, step.when_false, env, ctx)
            if hi and step.when_true.steps:
                hi = _apply(hi, step.when_true, env, ctx)
            lo.update(hi)
            terms = lo
        elif isinstance(step, Ulet):
            q = ctx.fresh()
            mask = 1 << q
            want = mask if step.init else 0
            if want:
                terms = {k | mask: v for k, v in terms.items()}
            inner = dict(env)
            inner[step.binder] = q
            terms = _apply(terms, step.body, inner, ctx)
            bad = sum(abs(v) ** 2 for k, v in terms.items() if k & mask != want)
            if bad > ANCILLA_TOL:
                raise AncillaNotReturned(
                    f"ulet ancilla {step.binder!r} not returned to |{int(step.init)}> "
                    f"(stray mass {bad:.3g})"
                )
            terms = {k & ~mask: v for k, v in terms.items() if k & mask == want}
            del ctx.allocated[q]
        else:
            raise TypeError(f"unknown gate step {step!r}")
    return terms


# --------------------------------------------------------------------------
# public state operations


def alloc_qubit(state: StateVector, init: bool) -> tuple[int, StateVector]:
    q = state.next_id
    mask = 1 << q if init else 0
    terms = {k | mask: v for k, v in state.terms.items()} if mask else dict(state.terms)
    return q, StateVector(terms, state.allocated + (q,), q + 1)


def release_qubit(state: StateVector, q: int) -> StateVector:
    """Drop ``q`` from the register; it must hold a definite basis value."""
    if q not in state.allocated:
        raise UnallocatedQubit(f"qubit {q} is not allocated")
    terms = _release(dict(state.terms), q)
    return StateVector(terms, tuple(x for x in state.allocated if x != q), state.next_id)


def _release(terms: dict, q: int) -> dict:
    mask = 1 << q
    p1 = sum(abs(v) ** 2 for k, v in terms.items() if k & mask)
    total = sum(abs(v) ** 2 for v in terms.values())
    if min(p1, total - p1) > ANCILLA_TOL:
        raise AncillaNotReturned(f"qubit {q} is not in a basis state (P(1)={p1:.6g})")
    keep = mask if p1 > total - p1 else 0
    return {k & ~mask: v for k, v in terms.items() if k & mask == keep}


def apply_unitary(state: StateVector, u: Unitary, env: Mapping | None = None) -> StateVector:
    ctx = _Ctx(state.allocated, state.next_id)
    terms = _apply(dict(state.terms), u, env or {}, ctx)
    return StateVector(terms, state.allocated, ctx.next_id)


def prob_one(state: StateVector, q: int) -> float:
    mask = 1 << q
    return sum(abs(v) ** 2 for k, v in state.terms.items() if k & mask)


def _project(terms: dict, mask: int, outcome: bool, prob: float) -> dict:
    want = mask if outcome else 0
    scale = 1 / math.sqrt(prob)
    return {k: v * scale for k, v in terms.items() if k & mask == want}


def measure_qubit(state: StateVector, q: int, rng: np.random.Generator) -> tuple[bool, StateVector]:
    if q not in state.allocated:
        raise UnallocatedQubit(f"qubit {q} is not allocated")
    p1 = min(1.0, max(0.0, prob_one(state, q)))
    b = bool(rng.random() < p1)
    terms = _project(state.terms, 1 << q, b, p1 if b else 1 - p1)
    return b, StateVector(terms, state.allocated, state.next_id)


def sample_pauli(channel: str, p: float, rng: np.random.Generator) -> str | None:
    """One draw of a single-qubit Pauli channel; ``None`` means no error."""
    u = rng.random()
    if u >= p:
        return None
    if channel == "bit_flip":
        return "X"
    if channel == "phase_flip":
        return "Z"
    if channel == "depolarizing":
        return "XYZ"[min(2, int(3 * u / p))]
    raise ValueError(f"unknown channel {channel!r}")


def apply_pauli(state: StateVector, q: int, pauli: str) -> StateVector:
    ctx = _Ctx(state.allocated, state.next_id)
    terms = _apply(dict(state.terms), Unitary((Rot(q, PAULIS[pauli]),)), {}, ctx)
    return StateVector(terms, state.allocated, state.next_id)


# --------------------------------------------------------------------------
# program evaluation


@dataclass
class OutcomeDistribution:
    entries: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.entries.get(tuple(key), 0.0)

    def get(self, key, default=0.0):
        return self.entries.get(tuple(key), default)

    def items(self):
        return sorted(self.entries.items())

    def total(self) -> float:
        return sum(self.entries.values())

    def modal(self):
        return max(sorted(self.entries), key=lambda k: self.entries[k])

    def max_abs_diff(self, other: OutcomeDistribution) -> float:
        keys = set(self.entries) | set(other.entries)
        return max((abs(self.get(k) - other.get(k)) for k in keys), default=0.0)

    def total_variation(self, other: OutcomeDistribution) -> float:
        keys = set(self.entries) | set(other.entries)
        return 0.5 * sum(abs(self.get(k) - other.get(k)) for k in keys)

    def is_deterministic(self, tol: float = 1e-9) -> bool:
        return any(p >= 1 - tol for p in self.entries.values())


class _Branch:
    __slots__ = ("prob", "terms", "ctx", "env", "results")

    def __init__(self, prob, terms, ctx, env, results):
        self.prob = prob
        self.terms = terms
        self.ctx = ctx
        self.env = env
        self.results = results

    def fork(self, prob, terms):
        return _Branch(prob, terms, self.ctx.copy(), dict(self.env), dict(self.results))


def _step(br: _Branch, s, i: int):
    """Execute a non-measurement statement in place."""
    if isinstance(s, MkQbit):
        q = br.ctx.fresh()
        if s.init:
            mask = 1 << q
            br.terms = {k | mask: v for k, v in br.terms.items()}
        br.env[s.binder] = q
    elif isinstance(s, ApplyU):
        br.terms = _apply(br.terms, s.u, br.env, br.ctx)
    elif isinstance(s, Release):
        q = _resolve(s.target, br.env, br.ctx)
        br.terms = _release(br.terms, q)
        del br.ctx.allocated[q]
        if isinstance(s.target, str):
            del br.env[s.target]
    else:
        raise TypeError(f"statement {i} ({type(s).__name__}) not handled here")


def _result(br: _Branch, ret: Return) -> tuple:
    try:
        return tuple(br.results[n] for n in ret.names)
    except KeyError as e:
        raise UnboundName(f"return references unmeasured name {e.args[0]!r}") from None


def evaluate_run(p: QProgram, seed: int | None = None, rng: np.random.Generator | None = None,
                 trace: list | None = None) -> tuple:
    """Sample one execution; ``trace`` (if given) collects the measurement record."""
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    br = _Branch(1.0, {0: 1 + 0j}, _Ctx((), 0), {}, {})
    for i, s in enumerate(p.stmts):
        if isinstance(s, MeasQbit):
            q = _resolve(s.target, br.env, br.ctx)
            mask = 1 << q
            p1 = min(1.0, max(0.0, sum(abs(v) ** 2 for k, v in br.terms.items() if k & mask)))
            b = bool(rng.random() < p1)
            br.terms = _project(br.terms, mask, b, p1 if b else 1 - p1)
            br.results[s.binder] = b
            if trace is not None:
                trace.append((i, s.binder, b))
        elif isinstance(s, Noise):
            for t in s.targets:
                pauli = sample_pauli(s.channel, s.p, rng)
                if pauli is not None:
                    q = _resolve(t, br.env, br.ctx)
                    br.terms = _rot(br.terms, 1 << q, PAULIS[pauli])
        elif isinstance(s, Return):
            return _result(br, s)
        else:
            _step(br, s, i)
    raise UnboundName("program ended without a return statement")


def evaluate_exact(p: QProgram, prune: float = PRUNE) -> OutcomeDistribution:
    """Enumerate both outcomes of every measurement, weighting by probability."""
    branches = [_Branch(1.0, {0: 1 + 0j}, _Ctx((), 0), {}, {})]
    for i, s in enumerate(p.stmts):
        if isinstance(s, Noise):
            raise StochasticNoisePresent(f"statement {i} is a stochastic noise marker")
        if isinstance(s, MeasQbit):
            nxt = []
            for br in branches:
                q = _resolve(s.target, br.env, br.ctx)
                mask = 1 << q
                p1 = min(1.0, max(0.0, sum(abs(v) ** 2 for k, v in br.terms.items() if k & mask)))
                for b, pb in ((False, 1 - p1), (True, p1)):
                    w = br.prob * pb
                    if w < prune:
                        continue
                    child = br.fork(w, _project(br.terms, mask, b, pb))
                    child.results[s.binder] = b
                    nxt.append(child)
            branches = nxt
        elif isinstance(s, Return):
            dist: dict = {}
            for br in branches:
                key = _result(br, s)
                dist[key] = dist.get(key, 0.0) + br.prob
            total = sum(dist.values())
            return OutcomeDistribution({k: v / total for k, v in sorted(dist.items())})
        else:
            for br in branches:
                _step(br, s, i)
    raise UnboundName("program ended without a return statement")


def final_state(p: QProgram, seed: int = 0) -> tuple[StateVector, dict]:
    """Run ``p`` up to (not including) its return; gives the state and name bindings."""
    rng = make_rng(seed)
    br = _Branch(1.0, {0: 1 + 0j}, _Ctx((), 0), {}, {})
    for i, s in enumerate(p.stmts):
        if isinstance(s, Return):
            break
        if isinstance(s, MeasQbit):
            q = _resolve(s.target, br.env, br.ctx)
            mask = 1 << q
            p1 = min(1.0, max(0.0, sum(abs(v) ** 2 for k, v in br.terms.items() if k & mask)))
            b = bool(rng.random() < p1)
            br.terms = _project(br.terms, mask, b, p1 if b else 1 - p1)
            br.results[s.binder] = b
        elif isinstance(s, Noise):
            raise StochasticNoisePresent(f"statement {i} is a stochastic noise marker")
        else:
            _step(br, s, i)
    state = StateVector(br.terms, tuple(br.ctx.allocated), br.ctx.next_id)
    return state, dict(br.env)
