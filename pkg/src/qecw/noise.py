"""Pauli noise channels, deterministic fault injection and the plain-vs-encoded trial harness."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy.stats import beta

from .codes import CodeScheme, get_code
from .errors import BadSite
from .ir import (
    ApplyU,
    Cond,
    MkQbit,
    Noise,
    PAULIS,
    QProgram,
    Release,
    Rot,
    Swap,
    Unitary,
    rot,
)
from .sim import (
    RNG_NAME,
    OutcomeDistribution,
    StateVector,
    apply_pauli,
    evaluate_exact,
    evaluate_run,
    make_rng,
    sample_pauli,
)
from .transform import AFTER_EACH_OP, Policy, transform_traced

CHANNELS = ("none", "bit_flip", "phase_flip", "depolarizing")
LOCATIONS = ("per_gate", "per_fragment_boundary")

# channel each code is designed against
MATCHED_CHANNEL = {"bitflip3": "bit_flip", "phaseflip3": "phase_flip", "steane7": "depolarizing"}

TVD_FLAG = 0.05


@dataclass(frozen=True)
class NoiseSpec:
    channel: str = "none"
    p: float = 0.0
    location: str = "per_fragment_boundary"

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.location not in LOCATIONS:
            raise ValueError(f"unknown location {self.location!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")

    @property
    def active(self) -> bool:
        return self.channel != "none" and self.p > 0


@dataclass(frozen=True)
class FaultInjection:
    """Apply ``pauli`` to ``qubit`` immediately after statement ``site``."""

    site: int
    qubit: object
    pauli: str = "X"


def apply_channel(state: StateVector, spec: NoiseSpec, qubits, rng) -> StateVector:
    if not spec.active:
        return state
    for q in qubits:
        pauli = sample_pauli(spec.channel, spec.p, rng)
        if pauli is not None:
            state = apply_pauli(state, q, pauli)
    return state


def analytic_majority_rate(p: float) -> float:
    """Probability that at least two of three independent flips occur."""
    return 3 * p**2 - 2 * p**3


def _live_after(p: QProgram, site: int) -> set:
    live: set = set()
    for s in p.stmts[: site + 1]:
        if isinstance(s, MkQbit):
            live.add(s.binder)
        elif isinstance(s, Release):
            live.discard(s.target)
    return live


def inject(p: QProgram, *faults: FaultInjection) -> QProgram:
    """Insert deterministic Pauli faults; sites refer to statement indices of ``p``."""
    stmts = list(p.stmts)
    for f in sorted(faults, key=lambda f: f.site, reverse=True):
        if not 0 <= f.site < len(stmts) - 1:
            raise BadSite(f"site {f.site} outside 0..{len(stmts) - 2}")
        if f.pauli not in PAULIS:
            raise BadSite(f"unknown Pauli {f.pauli!r}")
        if f.qubit not in _live_after(p, f.site):
            raise BadSite(f"qubit {f.qubit!r} is not allocated after statement {f.site}")
        stmts.insert(f.site + 1, ApplyU(rot(f.qubit, PAULIS[f.pauli])))
    return QProgram(stmts)


def _touched(step) -> list:
    if isinstance(step, Rot):
        return [step.target]
    if isinstance(step, Swap):
        return [step.a, step.b]
    if isinstance(step, Cond):
        out = [step.control]
        for branch in (step.when_false, step.when_true):
            for inner in branch.steps:
                out += [q for q in _touched(inner) if q not in out]
        return out
    return [q for inner in step.body.steps for q in _touched(inner) if q != step.binder]


def _per_gate(p: QProgram, spec: NoiseSpec) -> QProgram:
    out: list = []
    for s in p.stmts:
        if isinstance(s, ApplyU):
            for step in s.u.steps:
                out.append(ApplyU(Unitary((step,))))
                targets = tuple(dict.fromkeys(_touched(step)))
                if targets:
                    out.append(Noise(spec.channel, spec.p, targets))
        else:
            out.append(s)
    return QProgram(out)


def noisy_plain(p: QProgram, spec: NoiseSpec) -> QProgram:
    """Plain program with a channel after every logical gate step."""
    if not spec.active:
        return p
    if spec.location == "per_gate":
        return _per_gate(p, spec)
    out: list = []
    live: list = []
    for s in p.stmts:
        if isinstance(s, ApplyU):
            for step in s.u.steps:
                out.append(ApplyU(Unitary((step,))))
                out.append(Noise(spec.channel, spec.p, tuple(live)))
            continue
        out.append(s)
        if isinstance(s, MkQbit):
            live.append(s.binder)
        elif isinstance(s, Release):
            live.remove(s.target)
    return QProgram(out)


def noisy_encoded(p: QProgram, code: CodeScheme, spec: NoiseSpec,
                  policy: Policy = AFTER_EACH_OP) -> QProgram:
    """Transformed program with the channel at each logical-op boundary (or after every gate)."""
    tr = transform_traced(p, code, policy)
    if not spec.active:
        return tr.program
    if spec.location == "per_gate":
        return _per_gate(tr.program, spec)
    stmts = list(tr.program.stmts)
    for b in reversed(tr.op_ends):
        stmts.insert(b.index, Noise(spec.channel, spec.p, b.data))
    return QProgram(stmts)


# --------------------------------------------------------------------------
# trial harness


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    alpha = 1 - level
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass
class RateEstimate:
    errors: int
    trials: int
    ci_lo: float
    ci_hi: float
    tallies: dict
    tvd: float

    @property
    def rate(self) -> float:
        return self.errors / self.trials


@dataclass
class TrialReport:
    code: str
    channel: str
    p: float
    location: str
    policy: str
    trials: int
    seed: int
    reference: OutcomeDistribution
    plain: RateEstimate
    encoded: RateEstimate
    rng: str = RNG_NAME
    notes: list = field(default_factory=list)

    @property
    def plain_error_rate(self) -> float:
        return self.plain.rate

    @property
    def encoded_error_rate(self) -> float:
        return self.encoded.rate

    @property
    def modal(self) -> tuple:
        return self.reference.modal()

    @property
    def deterministic(self) -> bool:
        return self.reference.is_deterministic()


def _run_chunk(args):
    program, seed, stream, lo, hi = args
    return [evaluate_run(program, rng=make_rng(seed, stream, i)) for i in range(lo, hi)]


def run_trials(program: QProgram, trials: int, seed: int, stream: int = 0,
               workers: int = 1) -> list:
    """Outcomes of ``trials`` seeded runs; trial ``i`` draws from child stream (seed, stream, i)."""
    if workers <= 1 or trials < 200:
        return _run_chunk((program, seed, stream, 0, trials))
    step = -(-trials // workers)
    chunks = [(program, seed, stream, lo, min(trials, lo + step)) for lo in range(0, trials, step)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for part in pool.map(_run_chunk, chunks) for r in part]


def _estimate(outcomes: list, reference: OutcomeDistribution) -> RateEstimate:
    modal = reference.modal()
    tallies: dict = {}
    for r in outcomes:
        tallies[r] = tallies.get(r, 0) + 1
    n = len(outcomes)
    errors = n - tallies.get(modal, 0)
    lo, hi = clopper_pearson(errors, n)
    empirical = OutcomeDistribution({k: v / n for k, v in tallies.items()})
    return RateEstimate(errors, n, lo, hi, dict(sorted(tallies.items())),
                        empirical.total_variation(reference))


def estimate_logical_error_rate(p: QProgram, spec: NoiseSpec, trials: int, seed: int,
                                code: CodeScheme | str = "bitflip3",
                                policy: Policy | str = AFTER_EACH_OP,
                                workers: int | None = None) -> TrialReport:
    """Run ``p`` plain and encoded under ``spec``; an error is any result other than the noiseless mode."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(code, str):
        code = get_code(code)
    if isinstance(policy, str):
        policy = Policy.parse(policy)
    if workers is None:
        workers = int(os.environ.get("QECW_WORKERS", "1"))
    reference = evaluate_exact(p)
    plain = _estimate(run_trials(noisy_plain(p, spec), trials, seed, 0, workers), reference)
    encoded = _estimate(
        run_trials(noisy_encoded(p, code, spec, policy), trials, seed, 1, workers), reference
    )
    notes = []
    if not reference.is_deterministic():
        notes.append(
            "noiseless outcome is random: error rates count deviations from the modal outcome; "
            f"compare tvd against the {TVD_FLAG} flag instead"
        )
    if spec.location == "per_gate" and spec.active:
        notes.append("per_gate noise also hits encode/decode/correction circuits; "
                     "encoding can lose to the plain program at this location")
    return TrialReport(code.name, spec.channel, spec.p, spec.location, str(policy), trials, seed,
                       reference, plain, encoded, notes=notes)
