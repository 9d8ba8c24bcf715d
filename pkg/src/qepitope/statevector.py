"""Dense statevector simulator.

Qubit 0 is the least-significant bit of the basis index, so the amplitude
of ``|q_{n-1} ... q_1 q_0>`` sits at index ``sum(q_k << k)``. Gates update
amplitudes in place through strided views; no 2^n x 2^n matrix is built.

The module-level functions work on immutable :class:`Statevector` values.
``apply_batch`` is the vectorised engine underneath: it applies one gate to
a stack of states, optionally with a different rotation angle per state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .errors import ConfigurationError, ShapeError, SizeError, WiringError
from .gates import DOUBLE, ROTATIONS, Gate
from .rng import make_rng

MAX_QUBITS = 24

_SQRT1_2 = 1 / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.n_qubits:
            raise ShapeError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, "
                f"got {amps.shape[0]}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities)))

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


@dataclass(frozen=True)
class MeasurementCounts:
    shots: int
    counts: Dict[str, int]

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def frequency(self, outcome: str) -> float:
        return self.counts.get(outcome, 0) / self.shots


def new_zero_state(n_qubits: int, max_qubits: int = None) -> Statevector:
    cap = MAX_QUBITS if max_qubits is None else max_qubits
    if not 1 <= int(n_qubits) <= cap:
        raise SizeError(f"n_qubits must be in [1, {cap}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


def check_wiring(gate: Gate, n_qubits: int) -> None:
    qs = gate.qubits
    for q in qs:
        if not 0 <= q < n_qubits:
            raise WiringError(f"{gate}: qubit {q} out of range for {n_qubits} qubits")
    if len(set(qs)) != len(qs):
        raise WiringError(f"{gate}: repeated qubit index")


def _rotation_elements(kind, angle):
    half = np.asarray(angle, dtype=float) / 2
    c = np.cos(half)
    s = np.sin(half)
    if kind == "RX":
        return c, -1j * s, -1j * s, c
    if kind == "RY":
        return c, -s, s, c
    return np.exp(-1j * half), 0.0, 0.0, np.exp(1j * half)


def apply_batch(amps: np.ndarray, n_qubits: int, kind: str, qubits, angle=None) -> np.ndarray:
    """Apply one gate to every row of ``amps`` (shape ``(B, 2**n)``), in place.

    ``angle`` may be a scalar or a length-``B`` array for rotation gates.
    Returns ``amps`` for chaining. Wiring is not re-checked here.
    """
    b = amps.shape[0]
    if kind in DOUBLE:
        a, t = qubits
        tensor = amps.reshape((b,) + (2,) * n_qubits)
        ax_a = 1 + n_qubits - 1 - a
        ax_t = 1 + n_qubits - 1 - t

        def sl(va, vt):
            idx = [slice(None)] * (n_qubits + 1)
            idx[ax_a] = va
            idx[ax_t] = vt
            return tuple(idx)

        if kind == "CNOT":
            tmp = tensor[sl(1, 0)].copy()
            tensor[sl(1, 0)] = tensor[sl(1, 1)]
            tensor[sl(1, 1)] = tmp
        elif kind == "CZ":
            tensor[sl(1, 1)] *= -1
        else:
            tmp = tensor[sl(0, 1)].copy()
            tensor[sl(0, 1)] = tensor[sl(1, 0)]
            tensor[sl(1, 0)] = tmp
        return amps

    (q,) = qubits
    view = amps.reshape(b, 1 << (n_qubits - q - 1), 2, 1 << q)
    v0 = view[:, :, 0, :]
    v1 = view[:, :, 1, :]
    if kind == "Z":
        v1 *= -1
    elif kind == "X":
        tmp = v0.copy()
        v0[...] = v1
        v1[...] = tmp
    elif kind == "Y":
        tmp = v0.copy()
        v0[...] = -1j * v1
        v1[...] = 1j * tmp
    elif kind == "H":
        tmp = v0.copy()
        v0 += v1
        v0 *= _SQRT1_2
        v1 *= -1
        v1 += tmp
        v1 *= _SQRT1_2
    elif kind in ROTATIONS:
        m00, m01, m10, m11 = (
            np.reshape(e, (-1, 1, 1)) if np.ndim(e) else e
            for e in _rotation_elements(kind, angle)
        )
        if kind == "RZ":
            v0 *= m00
            v1 *= m11
        else:
            tmp = v0.copy()
            v0[...] = m00 * tmp + m01 * v1
            v1[...] = m10 * tmp + m11 * v1
    else:
        raise ValueError(f"unsupported gate kind {kind!r}")
    return amps


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    check_wiring(gate, state.n_qubits)
    amps = np.array(state.amplitudes, dtype=np.complex128).reshape(1, -1)
    apply_batch(amps, state.n_qubits, gate.kind, gate.qubits, gate.angle)
    return Statevector(state.n_qubits, amps[0])


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugating the left argument."""
    if a.n_qubits != b.n_qubits:
        raise ShapeError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _z_signs(n_qubits, qubit):
    bits = (np.arange(1 << n_qubits) >> qubit) & 1
    return 1.0 - 2.0 * bits


def expectation_z(state: Statevector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise WiringError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    return float(np.dot(_z_signs(state.n_qubits, qubit), state.probabilities))


def sample_outcomes(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Per-outcome tallies of ``shots`` inverse-CDF draws from ``probs``.

    Each shot consumes one uniform double ``u`` and lands on the first index
    whose cumulative probability exceeds ``u``. Outcome 0 is therefore hit
    exactly when ``u < probs[0]``.
    """
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = rng.random(shots)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, len(probs) - 1, out=idx)
    return np.bincount(idx, minlength=len(probs))


def sample_measurements(state: Statevector, shots: int, seed: int) -> MeasurementCounts:
    """Measure every qubit ``shots`` times; keys are bit strings, qubit 0 rightmost."""
    if int(shots) < 1:
        raise ConfigurationError(f"shots must be >= 1, got {shots}")
    tallies = sample_outcomes(state.probabilities, int(shots), make_rng(seed))
    n = state.n_qubits
    counts = {format(k, f"0{n}b"): int(c) for k, c in enumerate(tallies) if c}
    return MeasurementCounts(int(shots), counts)
