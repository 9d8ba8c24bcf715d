"""Gate records and their unitary matrices.

Rotations follow the usual convention R_P(theta) = exp(-i theta P / 2).
Two-qubit matrices are written in the basis |q_first q_second> with the
first listed qubit as the high bit, e.g. CNOT(control, target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

ROTATIONS = frozenset({"RX", "RY", "RZ"})
SINGLE = frozenset({"H", "X", "Y", "Z"}) | ROTATIONS
DOUBLE = frozenset({"CNOT", "CZ", "SWAP"})
GATE_KINDS = SINGLE | DOUBLE
SELF_INVERSE = GATE_KINDS - ROTATIONS


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in GATE_KINDS:
            raise ValueError(f"unsupported gate kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 1 if kind in SINGLE else 2
        if len(self.qubits) != arity:
            raise ValueError(f"{kind} acts on {arity} qubit(s), got {self.qubits}")
        if kind in ROTATIONS:
            if self.angle is None:
                raise ValueError(f"{kind} needs an angle")
            angle = float(self.angle)
            if not math.isfinite(angle):
                raise ValueError(f"{kind} angle must be finite")
            object.__setattr__(self, "angle", angle)
        elif self.angle is not None:
            raise ValueError(f"{kind} takes no angle")

    def inverse(self) -> "Gate":
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.qubits, -self.angle)
        return self

    def __str__(self):
        s = f"{self.kind} {','.join(str(q) for q in self.qubits)}"
        if self.angle is not None:
            s += f"({self.angle!r})"
        return s


# convenience constructors
def H(q):
    return Gate("H", (q,))


def X(q):
    return Gate("X", (q,))


def Y(q):
    return Gate("Y", (q,))


def Z(q):
    return Gate("Z", (q,))


def RX(q, angle):
    return Gate("RX", (q,), angle)


def RY(q, angle):
    return Gate("RY", (q,), angle)


def RZ(q, angle):
    return Gate("RZ", (q,), angle)


def CNOT(control, target):
    return Gate("CNOT", (control, target))


def CZ(a, b):
    return Gate("CZ", (a, b))


def SWAP(a, b):
    return Gate("SWAP", (a, b))


_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


def gate_matrix(gate: Gate) -> np.ndarray:
    """Return the 2x2 or 4x4 unitary of ``gate``."""
    if gate.kind in _FIXED:
        return _FIXED[gate.kind].copy()
    c = math.cos(gate.angle / 2)
    s = math.sin(gate.angle / 2)
    if gate.kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if gate.kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
