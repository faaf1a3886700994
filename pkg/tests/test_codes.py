import numpy as np
import pytest

from conftest import random_rotation
from oracles import HAD, basis, fid, reorder, steane_codewords
from qecw.codes import (
    CODE_NAMES,
    STEANE_POS,
    EncodedQubit,
    NameSupply,
    correction_fragment,
    decode_unitary,
    encode_unitary,
    get_code,
    lifted_rot,
    lifted_swap,
    lifted_ulet,
    measure_encoded,
    mk_encoded,
    parent_of,
)
from qecw.errors import AncillaNotReturned, CodeMismatch, OverlappingTuples, UnknownCode
from qecw.ir import (
    MeasQbit,
    EMPTY,
    PAULIS,
    ApplyU,
    H,
    I,
    MkQbit,
    QProgram,
    Return,
    Rotation,
    X,
    Z,
    cnot,
    rot,
    validate,
)
from qecw.sim import evaluate_exact, fidelity, final_state

LOGICAL_PREPS = {"zero": I, "one": X, "plus": H}
ERRORS = {
    "bitflip3": [("X", j) for j in range(3)],
    "phaseflip3": [("Z", j) for j in range(3)],
    "steane7": [(p, j) for j in range(7) for p in "XYZ"],
}


def names(code, tag="d"):
    return tuple(f"{tag}{j}" for j in range(code.n))


def prepared(code, prep: Rotation, tag="d"):
    """Statements leaving an encoded qubit in logical prep|0>."""
    eq = EncodedQubit(code, names(code, tag))
    stmts = [MkQbit(False, q) for q in eq.qubits]
    stmts += [ApplyU(rot(eq.parent, prep)), ApplyU(encode_unitary(eq))]
    return eq, stmts


def state_of(stmts):
    return final_state(QProgram(list(stmts) + [Return([])]))[0]


def test_catalog():
    assert get_code("bitflip3").n == 3
    assert get_code("phaseflip3").n == 3
    assert get_code("steane7").n == 7
    with pytest.raises(UnknownCode):
        get_code("shor9")


def test_parent_of():
    code = get_code("bitflip3")
    assert parent_of(EncodedQubit(code, (4, 5, 6))) == 4
    assert parent_of(EncodedQubit(get_code("steane7"), tuple(range(7)))) == 0
    eq, frag = mk_encoded(code, False)
    first = next(s for s in frag if isinstance(s, MkQbit))
    assert parent_of(eq) == first.binder


def test_overlapping_tuple_rejected():
    with pytest.raises(OverlappingTuples):
        EncodedQubit(get_code("bitflip3"), (0, 0, 1))


def test_mk_encoded_bitflip3_codewords():
    code = get_code("bitflip3")
    for init, bits in ((False, [0, 0, 0]), (True, [1, 1, 1])):
        eq, frag = mk_encoded(code, init, names=("a", "b", "c"))
        s, env = final_state(QProgram(list(frag) + [Return([])]))
        assert np.allclose(s.to_dense([env[q] for q in eq.qubits]), basis(bits))


def test_mk_encoded_steane_matches_stabilizer_projector():
    zero, one = steane_codewords()
    code = get_code("steane7")
    for init, want in ((False, zero), (True, one)):
        eq, frag = mk_encoded(code, init, names=names(code))
        s, env = final_state(QProgram(list(frag) + [Return([])]))
        by_slot = s.to_dense([env[q] for q in eq.qubits])
        vec = reorder(by_slot, [STEANE_POS.index(pos) for pos in range(1, 8)])
        assert fid(vec, want) >= 1 - 1e-9
    # |0_L>: equal superposition of the 8 even-weight codewords
    amps = [a for a in zero if abs(a) > 1e-9]
    assert len(amps) == 8 and np.allclose(np.abs(amps), 1 / np.sqrt(8))
    s = state_of(mk_encoded(code, False, names=names(code))[1])
    assert len(s.terms) == 8 and all(abs(abs(a) - 8**-0.5) < 1e-12 for a in s.terms.values())


def test_bitflip3_encode_amplitudes():
    code = get_code("bitflip3")
    prep = Rotation(0.6, -0.8, 0.8, 0.6)  # |0> -> 0.6|0> + 0.8|1>
    eq, stmts = prepared(code, prep)
    vec = state_of(stmts).to_dense()
    assert np.allclose(vec, 0.6 * basis([0, 0, 0]) + 0.8 * basis([1, 1, 1]))


def test_phaseflip3_encodes_zero_as_plus_plus_plus():
    eq, stmts = prepared(get_code("phaseflip3"), I)
    plus = HAD @ [1, 0]
    assert np.allclose(state_of(stmts).to_dense(), np.kron(np.kron(plus, plus), plus))


@pytest.mark.parametrize("code_name", CODE_NAMES)
def test_decode_encode_round_trip(code_name, rng):
    code = get_code(code_name)
    for _ in range(10):
        eq, stmts = prepared(code, random_rotation(rng))
        ref = state_of(stmts[: code.n + 1])
        back = state_of(stmts + [ApplyU(decode_unitary(eq))])
        assert fidelity(back, ref) >= 1 - 1e-9


def _corrected(code, prep, err, reclaim=True):
    eq, stmts = prepared(code, prep)
    clean = state_of(stmts)
    for pauli, j in err:
        stmts.append(ApplyU(rot(eq.qubits[j], PAULIS[pauli])))
    stmts += list(correction_fragment(eq, reclaim=reclaim))
    return clean, state_of(stmts)


@pytest.mark.parametrize("code_name", CODE_NAMES)
def test_single_errors_are_corrected(code_name):
    code = get_code(code_name)
    rng = np.random.default_rng(5)
    preps = list(LOGICAL_PREPS.values()) + [random_rotation(rng) for _ in range(3)]
    for prep in preps:
        for err in ERRORS[code_name]:
            clean, fixed = _corrected(code, prep, [err])
            assert set(fixed.allocated) == set(clean.allocated)
            assert fidelity(fixed, clean) >= 1 - 1e-9, (code_name, err)


def test_bitflip3_worked_example():
    code = get_code("bitflip3")
    prep = Rotation(0.6, -0.8, 0.8, 0.6)
    eq, stmts = prepared(code, prep)
    stmts.append(ApplyU(rot(eq.qubits[1], X)))
    assert np.allclose(state_of(stmts).to_dense(), 0.6 * basis([0, 1, 0]) + 0.8 * basis([1, 0, 1]))
    stmts += list(correction_fragment(eq))
    assert np.allclose(state_of(stmts).to_dense(), 0.6 * basis([0, 0, 0]) + 0.8 * basis([1, 1, 1]))


def test_steane_y4_on_plus():
    code = get_code("steane7")
    clean, fixed = _corrected(code, H, [("Y", 3)])
    assert fidelity(fixed, clean) >= 1 - 1e-9


def test_uncorrupted_codeword_unchanged():
    for name in CODE_NAMES:
        clean, fixed = _corrected(get_code(name), H, [])
        assert fidelity(fixed, clean) >= 1 - 1e-9


def test_bitflip3_negative_witnesses():
    code = get_code("bitflip3")
    clean, fixed = _corrected(code, H, [("Z", 0)])
    assert fidelity(fixed, clean) < 1 - 1e-3
    clean, fixed = _corrected(code, I, [("X", 0), ("X", 1)])
    assert fidelity(fixed, clean) < 1e-9
    one, _ = _corrected(code, X, [])
    assert fidelity(fixed, one) >= 1 - 1e-9


def test_correction_fragment_releases_ancillas():
    code = get_code("steane7")
    eq = EncodedQubit(code, names(code))
    frag = correction_fragment(eq)
    kinds = [type(s).__name__ for s in frag]
    assert kinds.count("MkQbit") == 6 and kinds.count("Release") == 6 and kinds.count("MeasQbit") == 6


def test_unitary_mode_correction_keeps_syndrome_qubits():
    code = get_code("bitflip3")
    clean, fixed = _corrected(code, H, [("X", 2)], reclaim=False)
    assert len(fixed.allocated) == 5
    frag = correction_fragment(EncodedQubit(code, ("a", "b", "c")), reclaim=False)
    assert [type(s).__name__ for s in frag] == ["MkQbit", "MkQbit", "ApplyU"]


# --- measurement


def _measure_program(code, prep):
    eq, stmts = prepared(code, prep)
    stmts += list(measure_encoded(eq, "m"))
    return eq, QProgram(stmts + [Return(["m"])])


def test_measure_encoded_one():
    code = get_code("bitflip3")
    eq, p = _measure_program(code, X)
    assert evaluate_exact(p).entries == {(True,): 1.0}
    s, env = final_state(p)
    assert np.allclose(s.to_dense([env[q] for q in eq.qubits]), basis([1, 1, 1]))


def test_measure_encoded_zero_and_plus():
    code = get_code("bitflip3")
    assert evaluate_exact(_measure_program(code, I)[1]).entries == {(False,): 1.0}
    d = evaluate_exact(_measure_program(code, H)[1])
    assert d[(True,)] == pytest.approx(0.5) and d[(False,)] == pytest.approx(0.5)


@pytest.mark.parametrize("code_name", CODE_NAMES)
def test_measure_encoded_matches_unencoded_measurement(code_name, rng):
    code = get_code(code_name)
    prep = random_rotation(rng)
    _, p = _measure_program(code, prep)
    direct = QProgram([MkQbit(False, "q"), ApplyU(rot("q", prep)), MeasQbit("q", "m"), Return(["m"])])
    assert evaluate_exact(p).max_abs_diff(evaluate_exact(direct)) < 1e-9


# --- lifted operations


def test_transversal_x_on_bitflip3():
    code = get_code("bitflip3")
    prep = Rotation(0.6, -0.8, 0.8, 0.6)
    eq, stmts = prepared(code, prep)
    u = lifted_rot(eq, X)
    assert u == rot("d0", X) + rot("d1", X) + rot("d2", X)
    vec = state_of(stmts + [ApplyU(u)]).to_dense()
    assert np.allclose(vec, 0.8 * basis([0, 0, 0]) + 0.6 * basis([1, 1, 1]))


@pytest.mark.parametrize("code_name, gate", [
    ("bitflip3", X), ("phaseflip3", Z), ("steane7", X), ("steane7", Z), ("steane7", H),
])
def test_transversal_equals_default(code_name, gate, rng):
    code = get_code(code_name)
    assert code.gate_class(gate) is not None
    for prep in [I, X, H, random_rotation(rng)]:
        eq, stmts = prepared(code, prep)
        a = state_of(stmts + [ApplyU(lifted_rot(eq, gate, transversal=True))])
        b = state_of(stmts + [ApplyU(lifted_rot(eq, gate, transversal=False))])
        assert fidelity(a, b) >= 1 - 1e-9


def test_identity_lifted_rot_is_identity(rng):
    for name in CODE_NAMES:
        eq, stmts = prepared(get_code(name), random_rotation(rng))
        assert fidelity(state_of(stmts + [ApplyU(lifted_rot(eq, I))]), state_of(stmts)) >= 1 - 1e-9


def test_lifted_swap_exchanges_logical_values():
    code = get_code("bitflip3")
    a, sa = prepared(code, I, "a")
    b, sb = prepared(code, X, "b")
    u = lifted_swap(a, b)
    stmts = sa + sb + [ApplyU(u)] + list(measure_encoded(a, "ma")) + list(measure_encoded(b, "mb"))
    assert evaluate_exact(QProgram(stmts + [Return(["ma", "mb"])])).entries == {(True, False): 1.0}
    twice = state_of(sa + sb + [ApplyU(u + u)])
    assert fidelity(twice, state_of(sa + sb)) >= 1 - 1e-9


def test_lifted_swap_errors():
    a = EncodedQubit(get_code("bitflip3"), ("a0", "a1", "a2"))
    b = EncodedQubit(get_code("steane7"), tuple(f"b{j}" for j in range(7)))
    with pytest.raises(CodeMismatch):
        lifted_swap(a, b)
    c = EncodedQubit(get_code("bitflip3"), ("a2", "c1", "c2"))
    with pytest.raises(OverlappingTuples):
        lifted_swap(a, c)


def test_lifted_ulet_identity_body(rng):
    code = get_code("bitflip3")
    eq, stmts = prepared(code, random_rotation(rng))
    u = lifted_ulet(code, False, lambda t: EMPTY)
    after = state_of(stmts + [ApplyU(u)])
    assert fidelity(after, state_of(stmts)) >= 1 - 1e-9
    assert set(after.allocated) == set(state_of(stmts).allocated)


def test_lifted_ulet_unreturned():
    code = get_code("bitflip3")
    eq, stmts = prepared(code, I)
    u = lifted_ulet(code, False, lambda t: lifted_rot(t, X))
    with pytest.raises(AncillaNotReturned):
        state_of(stmts + [ApplyU(u)])


def test_lifted_ulet_as_cnot_workspace():
    # target ^= control, routed through an encoded scratch qubit
    code = get_code("bitflip3")
    c, sc = prepared(code, H, "c")
    t, st = prepared(code, I, "g")

    def lcnot(x, y):
        return (decode_unitary(x) + decode_unitary(y) + cnot(x.parent, y.parent)
                + encode_unitary(y) + encode_unitary(x))

    def body(w):
        return lcnot(c, w) + lcnot(w, t) + lcnot(c, w)

    supply = NameSupply(c.qubits + t.qubits)
    stmts = sc + st + [ApplyU(lifted_ulet(code, False, body, supply=supply))]
    stmts += list(measure_encoded(c, "mc")) + list(measure_encoded(t, "mt"))
    p = QProgram(stmts + [Return(["mc", "mt"])])
    assert validate(p).ok
    d = evaluate_exact(p)
    assert set(d.entries) == {(False, False), (True, True)}
    assert d[(True, True)] == pytest.approx(0.5)
    assert len(final_state(p)[0].allocated) == 6
