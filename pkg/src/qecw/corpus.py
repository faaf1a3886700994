"""Built-in example programs."""

from .ir import (
    ApplyU,
    H,
    I,
    MeasQbit,
    MkQbit,
    QProgram,
    Return,
    X,
    Z,
    cnot,
    cond,
    rot,
    swap,
    ulet,
)


def example() -> QProgram:
    """Allocate |0>, apply NOT, measure: always True."""
    return QProgram([
        MkQbit(False, "q1"),
        ApplyU(rot("q1", X)),
        MeasQbit("q1", "b"),
        Return(["b"]),
    ])


def bell() -> QProgram:
    return QProgram([
        MkQbit(False, "a"),
        MkQbit(False, "b"),
        ApplyU(rot("a", H) + cnot("a", "b")),
        MeasQbit("a", "ma"),
        MeasQbit("b", "mb"),
        Return(["ma", "mb"]),
    ])


def interference() -> QProgram:
    """H Z H = X, so the outcome is always True."""
    return QProgram([
        MkQbit(False, "q"),
        ApplyU(rot("q", H) + rot("q", Z) + rot("q", H)),
        MeasQbit("q", "m"),
        Return(["m"]),
    ])


def conditional() -> QProgram:
    """Control in |+>; target gets H when the control is 0 and X when it is 1."""
    return QProgram([
        MkQbit(False, "c"),
        MkQbit(False, "t"),
        ApplyU(rot("c", H)),
        ApplyU(cond("c", rot("t", H), rot("t", X))),
        MeasQbit("c", "mc"),
        MeasQbit("t", "mt"),
        Return(["mc", "mt"]),
    ])


def swap_ulet() -> QProgram:
    """Exercises swap and a scoped ancilla used as CNOT workspace."""
    return QProgram([
        MkQbit(False, "a"),
        MkQbit(True, "b"),
        ApplyU(rot("a", H)),
        ApplyU(swap("a", "b")),
        ApplyU(ulet(False, "w", cnot("b", "w") + cnot("w", "a") + cnot("b", "w"))),
        MeasQbit("a", "ma"),
        MeasQbit("b", "mb"),
        Return(["ma", "mb"]),
    ])


def identity_probe() -> QProgram:
    """One idle logical step between preparation and measurement."""
    return QProgram([
        MkQbit(False, "q"),
        ApplyU(rot("q", I)),
        MeasQbit("q", "m"),
        Return(["m"]),
    ])


def hadamard_probe() -> QProgram:
    """|0> -> |+> -> |0>; a phase flip on |+> between the two steps flips the outcome."""
    return QProgram([
        MkQbit(False, "q"),
        ApplyU(rot("q", H)),
        ApplyU(rot("q", H)),
        MeasQbit("q", "m"),
        Return(["m"]),
    ])


CORPUS = {
    "example": example,
    "bell": bell,
    "interference": interference,
    "conditional": conditional,
}

EXTRA = {
    "swap_ulet": swap_ulet,
    "identity_probe": identity_probe,
    "hadamard_probe": hadamard_probe,
}


def get_program(name: str) -> QProgram:
    try:
        return {**CORPUS, **EXTRA}[name]()
    except KeyError:
        raise KeyError(f"no built-in program {name!r}") from None
