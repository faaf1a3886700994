"""Quantum programs, a sparse simulator, and an automatic error-correction rewrite."""

from .codes import CODE_NAMES, EncodedQubit, get_code
from .ir import QProgram, Unitary, invert, seq_compose, validate
from .noise import NoiseSpec, estimate_logical_error_rate
from .sim import evaluate_exact, evaluate_run, new_state
from .transform import transform

__all__ = [
    "CODE_NAMES", "EncodedQubit", "NoiseSpec", "QProgram", "Unitary",
    "estimate_logical_error_rate", "evaluate_exact", "evaluate_run", "get_code",
    "invert", "new_state", "seq_compose", "transform", "validate",
]
