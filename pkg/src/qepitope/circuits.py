"""Feature-map, ansatz and kernel-overlap circuits.

The data encoding is the second-order Pauli-Z evolution map: per repetition
a Hadamard layer, ``RZ(2 x_i)`` on each qubit, then for every entangling
pair ``(i, j)`` the ZZ phase ``CNOT(i,j) RZ_j(2 (pi - x_i)(pi - x_j)) CNOT(i,j)``.

The trainable ansatz alternates rotation blocks (``RY`` then ``RZ`` on every
qubit) with a fixed entangler, ``layers`` times, and closes with one more
rotation block. Parameters are laid out block by block, qubit by qubit, RY
before RZ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import statevector as sv
from .errors import ParseError, ShapeError, SizeError
from .gates import Gate

ENTANGLER_KINDS = ("cz_ring", "swap_chain")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise SizeError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        for g in gates:
            sv.check_wiring(g, self.n_qubits)
        object.__setattr__(self, "gates", gates)

    def __len__(self):
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ShapeError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def to_text(self) -> str:
        """One gate per line: ``KIND q0[,q1][(angle)]``."""
        return "".join(f"{g}\n" for g in self.gates)

    @classmethod
    def from_text(cls, n_qubits: int, text: str) -> "Circuit":
        gates = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            try:
                kind, rest = line.split(None, 1)
                angle = None
                if "(" in rest:
                    rest, tail = rest.split("(", 1)
                    angle = float(tail.rstrip(")"))
                qubits = tuple(int(q) for q in rest.split(","))
                gates.append(Gate(kind, qubits, angle))
            except ValueError as exc:
                raise ParseError(f"bad gate line {line!r}: {exc}", line=lineno) from exc
        return cls(n_qubits, gates)


@dataclass(frozen=True)
class FeatureMapSpec:
    n_qubits: int
    depth: int = 2
    entangling_pairs: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise SizeError("feature map needs at least one qubit")
        if self.depth < 1:
            raise SizeError("feature map depth must be >= 1")
        pairs = self.entangling_pairs
        if pairs is None:
            pairs = tuple((i, i + 1) for i in range(self.n_qubits - 1))
        pairs = tuple((int(a), int(b)) for a, b in pairs)
        for a, b in pairs:
            if a == b or not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ShapeError(f"bad entangling pair {(a, b)}")
        object.__setattr__(self, "entangling_pairs", pairs)


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int = 2
    entangler_kind: str = "cz_ring"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise SizeError("the ansatz entangler needs at least two qubits")
        if self.layers < 1:
            raise SizeError("ansatz needs at least one layer")
        if self.entangler_kind not in ENTANGLER_KINDS:
            raise ValueError(f"entangler_kind must be one of {ENTANGLER_KINDS}")

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * (self.layers + 1)


def _check_features(X, n_qubits):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_qubits:
        raise ShapeError(f"expected {n_qubits} features, got shape {np.shape(X)}")
    return X


def feature_map_ops(X, spec: FeatureMapSpec):
    """Gate template for a batch ``X`` of shape ``(B, n)``.

    Yields ``(kind, qubits, angles)`` with ``angles`` a length-B array or None.
    """
    X = _check_features(X, spec.n_qubits)
    ops = []
    for _ in range(spec.depth):
        for q in range(spec.n_qubits):
            ops.append(("H", (q,), None))
        for q in range(spec.n_qubits):
            ops.append(("RZ", (q,), 2.0 * X[:, q]))
        for a, b in spec.entangling_pairs:
            ops.append(("CNOT", (a, b), None))
            ops.append(("RZ", (b,), 2.0 * (math.pi - X[:, a]) * (math.pi - X[:, b])))
            ops.append(("CNOT", (a, b), None))
    return ops


def build_feature_map(x, spec: FeatureMapSpec) -> Circuit:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("build_feature_map takes a single feature vector")
    gates = [
        Gate(kind, qubits, None if angles is None else float(angles[0]))
        for kind, qubits, angles in feature_map_ops(x, spec)
    ]
    return Circuit(spec.n_qubits, gates)


def feature_states(X, spec: FeatureMapSpec) -> np.ndarray:
    """Amplitudes of U_phi(x)|0...0> for every row of ``X``; shape ``(B, 2**n)``."""
    X = _check_features(X, spec.n_qubits)
    amps = np.zeros((X.shape[0], 1 << spec.n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    for kind, qubits, angles in feature_map_ops(X, spec):
        sv.apply_batch(amps, spec.n_qubits, kind, qubits, angles)
    return amps


def entangler_pairs(n_qubits: int, kind: str) -> List[Tuple[int, int]]:
    if n_qubits < 2:
        raise SizeError("an entangler needs at least two qubits")
    if kind == "cz_ring":
        if n_qubits == 2:
            return [(0, 1)]
        return [(i, (i + 1) % n_qubits) for i in range(n_qubits)]
    if kind == "swap_chain":
        return [(i, i + 1) for i in range(n_qubits - 1)]
    raise ValueError(f"entangler kind must be one of {ENTANGLER_KINDS}, got {kind!r}")


def build_entangler(n_qubits: int, kind: str = "cz_ring") -> Circuit:
    gate = "CZ" if kind == "cz_ring" else "SWAP"
    return Circuit(n_qubits, [Gate(gate, p) for p in entangler_pairs(n_qubits, kind)])


def ansatz_layout(spec: AnsatzSpec) -> List[Tuple[str, Tuple[int, ...], Optional[int]]]:
    """``(kind, qubits, parameter index or None)`` for each ansatz gate, in order."""
    ent_gate = "CZ" if spec.entangler_kind == "cz_ring" else "SWAP"
    ent = entangler_pairs(spec.n_qubits, spec.entangler_kind)
    layout = []
    p = 0
    for block in range(spec.layers + 1):
        for q in range(spec.n_qubits):
            layout.append(("RY", (q,), p))
            layout.append(("RZ", (q,), p + 1))
            p += 2
        if block < spec.layers:
            layout.extend((ent_gate, pair, None) for pair in ent)
    return layout


def _check_theta(theta, spec: AnsatzSpec) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (spec.n_params,):
        raise ShapeError(f"ansatz expects {spec.n_params} parameters, got {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def build_ansatz(theta, spec: AnsatzSpec) -> Circuit:
    theta = _check_theta(theta, spec)
    gates = [
        Gate(kind, qubits, None if p is None else float(theta[p]))
        for kind, qubits, p in ansatz_layout(spec)
    ]
    return Circuit(spec.n_qubits, gates)


def apply_ansatz_batch(amps: np.ndarray, thetas: np.ndarray, spec: AnsatzSpec) -> np.ndarray:
    """Apply W(theta_r) to row r of ``amps`` in place; ``thetas`` is ``(B, P)`` or ``(P,)``."""
    thetas = _check_theta(thetas, spec)
    for kind, qubits, p in ansatz_layout(spec):
        angle = None if p is None else thetas[..., p]
        sv.apply_batch(amps, spec.n_qubits, kind, qubits, angle)
    return amps


def invert(circuit: Circuit) -> Circuit:
    return Circuit(circuit.n_qubits, [g.inverse() for g in reversed(circuit.gates)])


def build_kernel_circuit(x_i, x_j, spec: FeatureMapSpec) -> Circuit:
    """U_phi(x_i)^dagger U_phi(x_j); its all-zeros probability is |<phi(x_i)|phi(x_j)>|^2."""
    return build_feature_map(x_j, spec) + invert(build_feature_map(x_i, spec))


def simulate(circuit: Circuit, state: Optional[sv.Statevector] = None) -> sv.Statevector:
    """Run ``circuit`` on ``state`` (default ``|0...0>``)."""
    if state is None:
        state = sv.new_zero_state(circuit.n_qubits)
    elif state.n_qubits != circuit.n_qubits:
        raise ShapeError("state and circuit widths differ")
    amps = np.array(state.amplitudes).reshape(1, -1)
    for g in circuit.gates:
        sv.apply_batch(amps, circuit.n_qubits, g.kind, g.qubits, g.angle)
    return sv.Statevector(circuit.n_qubits, amps[0])
