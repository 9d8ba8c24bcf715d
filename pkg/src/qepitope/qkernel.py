"""Quantum kernel values and Gram matrices.

``K(x_i, x_j) = |<phi(x_i)|phi(x_j)>|^2`` is computed either exactly from
statevectors or, in shots mode, as the fraction of all-zeros outcomes when
the overlap circuit ``U_phi(x_i)^dagger U_phi(x_j)`` is measured R times.

Shot streams are keyed so results never depend on evaluation order:
Gram entry ``(i, j)`` draws from ``make_rng(seed, i, j)`` and a cross-kernel
entry between a new point ``x`` and stored point ``k`` draws from
``make_rng(seed, vector_key(x), k)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import circuits
from . import statevector as sv
from .circuits import FeatureMapSpec
from .errors import ConfigurationError, NumericalError, ParseError, ShapeError, SizeError
from .rng import make_rng, vector_key

PSD_TOL = 1e-8


@dataclass(frozen=True)
class KernelMode:
    """``shots=None`` means exact statevector overlaps."""

    shots: Optional[int] = None

    def __post_init__(self):
        if self.shots is not None:
            if int(self.shots) < 1:
                raise ConfigurationError(f"shots must be >= 1, got {self.shots}")
            object.__setattr__(self, "shots", int(self.shots))

    @property
    def exact(self) -> bool:
        return self.shots is None

    @classmethod
    def parse(cls, text: Union[str, int, None]) -> "KernelMode":
        if text is None or str(text).strip().lower() == "exact":
            return cls()
        try:
            return cls(int(text))
        except ValueError as exc:
            raise ConfigurationError(f"shots must be 'exact' or a positive integer, got {text!r}") from exc

    def __str__(self):
        return "exact" if self.exact else str(self.shots)


EXACT = KernelMode()


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    values: np.ndarray
    mode: KernelMode = EXACT

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ShapeError(f"kernel matrix must be square, got {vals.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])


def kernel_exact(x_i, x_j, spec: FeatureMapSpec) -> float:
    phi_i = circuits.simulate(circuits.build_feature_map(x_i, spec))
    phi_j = circuits.simulate(circuits.build_feature_map(x_j, spec))
    return float(abs(sv.inner_product(phi_i, phi_j)) ** 2)


def kernel_shot_estimate(x_i, x_j, spec: FeatureMapSpec, shots: int, seed: int) -> float:
    """r_0 / R for the overlap circuit measured ``shots`` times."""
    if int(shots) < 1:
        raise ConfigurationError(f"shots must be >= 1, got {shots}")
    state = circuits.simulate(circuits.build_kernel_circuit(x_i, x_j, spec))
    counts = sv.sample_measurements(state, shots, seed)
    return counts.frequency("0" * spec.n_qubits)


def _zero_count(p0, shots, rng):
    # Only the all-zeros bin matters, and inverse-CDF sampling hits it iff u < p0.
    return int(sv.sample_outcomes(np.array([p0, 1.0 - p0]), shots, rng)[0])


def _overlaps(A, B, spec):
    sa = circuits.feature_states(A, spec)
    sb = circuits.feature_states(B, spec)
    return np.clip(np.abs(sa.conj() @ sb.T) ** 2, 0.0, 1.0)


def kernel_matrix(X, spec: FeatureMapSpec, mode: KernelMode = EXACT, seed: int = 0) -> KernelMatrix:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise SizeError("kernel_matrix needs at least one feature vector")
    if X.shape[1] != spec.n_qubits:
        raise ShapeError(f"expected {spec.n_qubits} features, got {X.shape[1]}")
    t = X.shape[0]
    exact = _overlaps(X, X, spec)
    K = np.eye(t)
    iu, ju = np.triu_indices(t, 1)
    if mode.exact:
        K[iu, ju] = exact[iu, ju]
    else:
        R = mode.shots
        for i, j in zip(iu, ju):
            K[i, j] = _zero_count(exact[i, j], R, make_rng(seed, i, j)) / R
    K[ju, iu] = K[iu, ju]
    return KernelMatrix(K, mode)


def cross_kernel(X_new, X_ref, spec: FeatureMapSpec, mode: KernelMode = EXACT, seed: int = 0) -> np.ndarray:
    """Kernel rows between new points and stored reference points, shape ``(len(X_new), len(X_ref))``."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    X_ref = np.atleast_2d(np.asarray(X_ref, dtype=float))
    if X_ref.size == 0:
        return np.zeros((X_new.shape[0], 0))
    exact = _overlaps(X_new, X_ref, spec)
    if mode.exact:
        return exact
    R = mode.shots
    out = np.empty_like(exact)
    for a in range(X_new.shape[0]):
        key = vector_key(X_new[a])
        for k in range(X_ref.shape[0]):
            out[a, k] = _zero_count(exact[a, k], R, make_rng(seed, key, k)) / R
    return out


def regularize_psd(K: KernelMatrix) -> KernelMatrix:
    """Project onto the PSD cone and rescale back to a unit diagonal."""
    vals = np.asarray(K.values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("kernel matrix has non-finite entries")
    vals = (vals + vals.T) / 2
    try:
        w, V = np.linalg.eigh(vals)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    fixed = (V * np.clip(w, 0.0, None)) @ V.T
    fixed = (fixed + fixed.T) / 2
    d = np.diag(fixed).copy()
    scale = np.where(d > 1e-12, 1.0 / np.sqrt(np.where(d > 1e-12, d, 1.0)), 1.0)
    fixed = fixed * scale[:, None] * scale[None, :]
    fixed = (fixed + fixed.T) / 2
    np.fill_diagonal(fixed, 1.0)
    return KernelMatrix(fixed, K.mode)


def needs_repair(K: KernelMatrix) -> bool:
    return not K.mode.exact and K.min_eigenvalue() < -PSD_TOL


def format_kernel_dump(K: KernelMatrix) -> str:
    buf = io.StringIO()
    buf.write(f"{K.size}\n")
    for row in K.values:
        buf.write(" ".join(f"{v:.12g}" for v in row))
        buf.write("\n")
    return buf.getvalue()


def write_kernel_dump(K: KernelMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_kernel_dump(K))


def parse_kernel_dump(text: str, mode: KernelMode = EXACT) -> KernelMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty kernel dump")
    try:
        t = int(lines[0])
    except ValueError as exc:
        raise ParseError("first line must be the matrix size", line=1) from exc
    if len(lines) != t + 1:
        raise ParseError(f"expected {t} rows, found {len(lines) - 1}")
    rows = []
    for n, ln in enumerate(lines[1:], 2):
        try:
            row = [float(v) for v in ln.split()]
        except ValueError as exc:
            raise ParseError(str(exc), line=n) from exc
        if len(row) != t:
            raise ParseError(f"expected {t} values", line=n)
        rows.append(row)
    return KernelMatrix(np.array(rows).reshape(t, t), mode)


def read_kernel_dump(path, mode: KernelMode = EXACT) -> KernelMatrix:
    with open(path, encoding="utf-8") as fh:
        return parse_kernel_dump(fh.read(), mode)
