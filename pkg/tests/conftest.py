import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qecw.ir import Rotation  # noqa: E402


def random_rotation(rng) -> Rotation:
    """Haar-ish random 2x2 unitary from a QR decomposition."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    q = q @ np.diag(np.diag(r) / abs(np.diag(r)))
    return Rotation(*q.reshape(-1))


def random_qubit(rng):
    """Random normalized (alpha, beta)."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(rng, n, depth, ulet=True):
    """Random gate-grammar circuit over integer qubits 0..n-1."""
    from qecw.ir import EMPTY, H, S, X, cnot, cond, rot, swap, ulet as mk_ulet

    u = EMPTY
    for _ in range(depth):
        kind = rng.integers(0, 5 if ulet else 4)
        q = int(rng.integers(n))
        if kind == 0 or n == 1:
            u = u + rot(q, random_rotation(rng))
        elif kind == 1:
            u = u + rot(q, [H, S, X][int(rng.integers(3))])
        elif kind == 2:
            a, b = (int(x) for x in rng.choice(n, 2, replace=False))
            u = u + swap(a, b)
        elif kind == 3:
            c, t = (int(x) for x in rng.choice(n, 2, replace=False))
            u = u + cond(c, rot(t, random_rotation(rng)), rot(t, random_rotation(rng)))
        else:
            # compute a parity into the ancilla, use it as a control, uncompute
            c, t = (int(x) for x in rng.choice(n, 2, replace=False))
            body = cnot(c, "w") + cond("w", EMPTY, rot(t, random_rotation(rng))) + cnot(c, "w")
            u = u + mk_ulet(False, "w", body)
    return u


def product_state(n, rng=None):
    """n fresh qubits; random single-qubit states when rng is given."""
    from qecw.ir import rot
    from qecw.sim import alloc_qubit, apply_unitary, new_state

    s = new_state()
    for _ in range(n):
        q, s = alloc_qubit(s, False)
        if rng is not None:
            s = apply_unitary(s, rot(q, random_rotation(rng)))
    return s
