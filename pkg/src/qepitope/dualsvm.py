"""Dual SVM over a precomputed kernel matrix.

The objective is maximised as written, without the customary 1/2::

    L(alpha) = sum_i alpha_i - sum_ij y_i y_j alpha_i alpha_j K_ij
    s.t. sum_i alpha_i y_i = 0,  0 <= alpha_i <= C

Its maximiser is exactly half the textbook (1/2-scaled) multipliers, so the
decision function uses ``2 * alpha``::

    f(x) = sum_i 2 alpha_i y_i K(x_i, x) + b

which restores the unit functional margin ``y_i f(x_i) = 1`` on free
support vectors. ``C = inf`` gives the hard-margin problem.

The solver is SMO with maximal-violating-pair selection, written against the
equivalent minimisation ``1/2 a^T Q a - e^T a`` with ``Q = 2 (y y^T) * K``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kvformat as kv
from .circuits import FeatureMapSpec
from .errors import ConvergenceWarning, DegenerateProblemError, ParseError, ShapeError
from .qkernel import EXACT, KernelMatrix, KernelMode, cross_kernel

TAU = 1e-12
PSD_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class DualProblem:
    K: KernelMatrix
    y: np.ndarray
    C: float = 1.0
    tol: float = 1e-6

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if y.shape[0] != self.K.size:
            raise ShapeError(f"{y.shape[0]} labels for a {self.K.size}x{self.K.size} kernel")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        if not (np.any(y > 0) and np.any(y < 0)):
            raise DegenerateProblemError("both classes must be present")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "C", float(self.C))


@dataclass(frozen=True, eq=False)
class DualSolution:
    alphas: np.ndarray
    bias: float
    objective: float
    support_indices: List[int]
    converged: bool = True
    iterations: int = 0
    warning: Optional[str] = None
    objective_trace: Optional[List[float]] = field(default=None, repr=False)


def dual_objective(alphas, K, y) -> float:
    a = np.asarray(alphas, dtype=float)
    y = np.asarray(y, dtype=float)
    Kv = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if not (a.shape == y.shape and Kv.shape == (a.shape[0], a.shape[0])):
        raise ShapeError("alphas, labels and kernel sizes disagree")
    ay = a * y
    return float(a.sum() - ay @ Kv @ ay)


def _bias(alphas, y, Kv, C, tol):
    g = Kv @ (2.0 * alphas * y)
    r = y - g
    free = (alphas > tol) & (alphas < C - tol)
    if np.any(free):
        return float(np.mean(r[free]))
    # No free vector: pick the midpoint of the interval of biases that keeps
    # every bounded multiplier KKT-consistent.
    at_lower = alphas <= tol
    at_upper = ~at_lower
    lo_mask = (at_lower & (y > 0)) | (at_upper & (y < 0))
    hi_mask = (at_lower & (y < 0)) | (at_upper & (y > 0))
    lo = r[lo_mask].max() if np.any(lo_mask) else None
    hi = r[hi_mask].min() if np.any(hi_mask) else None
    if lo is None and hi is None:
        return 0.0
    if lo is None:
        return float(hi)
    if hi is None:
        return float(lo)
    return float((lo + hi) / 2)


def solve_dual(problem: DualProblem, max_iter: Optional[int] = None, record_trace: bool = False) -> DualSolution:
    Kv = problem.K.values
    if not np.array_equal(Kv, Kv.T):
        Kv = (Kv + Kv.T) / 2
    y = problem.y
    C = problem.C
    tol = problem.tol
    t = y.shape[0]
    if max_iter is None:
        max_iter = 10_000 * t
    Q = 2.0 * np.outer(y, y) * Kv
    diagQ = np.diag(Q).copy()
    alpha = np.zeros(t)
    G = -np.ones(t)
    trace = [0.0] if record_trace else None

    converged = False
    it = 0
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not (np.any(up) and np.any(low)):
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        j = int(np.flatnonzero(low)[np.argmin(yG[low])])
        if yG[i] - yG[j] <= tol:
            converged = True
            break
        it += 1

        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diagQ[i] + diagQ[j] + 2 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = diagQ[i] + diagQ[j] - 2 * Q[i, j]
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
                if aj > C:
                    aj, ai = C, total - C
            else:
                if aj < 0:
                    aj, ai = 0.0, total
                if ai < 0:
                    ai, aj = 0.0, total

        d_i = ai - alpha[i]
        d_j = aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        G += Q[:, i] * d_i + Q[:, j] * d_j
        if record_trace:
            trace.append(dual_objective(alpha, Kv, y))

    warning = None
    if not converged:
        warning = f"SMO stopped at the iteration cap ({max_iter}) before reaching tol={tol:g}"
        warnings.warn(warning, ConvergenceWarning, stacklevel=2)

    support = [int(k) for k in np.flatnonzero(alpha > tol)]
    return DualSolution(
        alphas=alpha,
        bias=_bias(alpha, y, Kv, C, tol),
        objective=dual_objective(alpha, Kv, y),
        support_indices=support,
        converged=converged,
        iterations=it,
        warning=warning,
        objective_trace=trace,
    )


@dataclass(frozen=True, eq=False)
class QSVMModel:
    """Trained classifier: support vectors with their unscaled multipliers."""

    alphas: np.ndarray
    labels: np.ndarray
    support_vectors: np.ndarray
    bias: float
    feature_map: FeatureMapSpec
    kernel_mode: KernelMode = EXACT
    seed: int = 0
    C: float = 1.0
    tol: float = 1e-6
    objective: float = float("nan")
    converged: bool = True

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=float).reshape(-1, self.feature_map.n_qubits)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float).reshape(-1))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=float).reshape(-1))
        if not (len(self.alphas) == len(self.labels) == sv.shape[0]):
            raise ShapeError("support vectors, labels and alphas must have equal length")

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]

    def to_kv(self):
        fm = self.feature_map
        items = [
            ("format", "qepitope-qsvm/1"),
            ("model", "qsvm"),
            ("n_qubits", str(fm.n_qubits)),
            ("feature_map.depth", str(fm.depth)),
            ("feature_map.pairs", " ".join(f"{a}-{b}" for a, b in fm.entangling_pairs)),
            ("kernel_mode", str(self.kernel_mode)),
            ("seed", str(self.seed)),
            ("C", kv.fmt_float(self.C)),
            ("tol", kv.fmt_float(self.tol)),
            ("objective", kv.fmt_float(self.objective)),
            ("converged", "true" if self.converged else "false"),
            ("bias", kv.fmt_float(self.bias)),
            ("n_support", str(self.n_support)),
            ("alphas", kv.fmt_floats(self.alphas)),
            ("labels", " ".join(str(int(v)) for v in self.labels)),
        ]
        items += [(f"sv.{k}", kv.fmt_floats(row)) for k, row in enumerate(self.support_vectors)]
        return items

    @classmethod
    def from_kv(cls, data, path=None) -> "QSVMModel":
        req = lambda key: kv.require(data, key, path)  # noqa: E731
        if req("model") != "qsvm":
            raise ParseError("not a qsvm model file", path=path)
        try:
            n = int(req("n_qubits"))
            pairs_text = req("feature_map.pairs")
            pairs = tuple(tuple(int(v) for v in p.split("-")) for p in pairs_text.split())
            fm = FeatureMapSpec(n, int(req("feature_map.depth")), pairs)
            m = int(req("n_support"))
            svs = [kv.parse_floats(req(f"sv.{k}")) for k in range(m)]
            return cls(
                alphas=kv.parse_floats(req("alphas")),
                labels=kv.parse_floats(req("labels")),
                support_vectors=np.array(svs).reshape(m, n),
                bias=float(req("bias")),
                feature_map=fm,
                kernel_mode=KernelMode.parse(req("kernel_mode")),
                seed=int(req("seed")),
                C=float(req("C")),
                tol=float(req("tol")),
                objective=float(req("objective")),
                converged=req("converged") == "true",
            )
        except (ValueError, ShapeError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"invalid qsvm model: {exc}", path=path) from exc


def make_model(X, y, solution: DualSolution, feature_map: FeatureMapSpec, kernel_mode=EXACT,
               seed=0, C=1.0, tol=1e-6) -> QSVMModel:
    idx = solution.support_indices
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return QSVMModel(
        alphas=solution.alphas[idx],
        labels=y[idx],
        support_vectors=X[idx].reshape(len(idx), feature_map.n_qubits),
        bias=solution.bias,
        feature_map=feature_map,
        kernel_mode=kernel_mode,
        seed=seed,
        C=C,
        tol=tol,
        objective=solution.objective,
        converged=solution.converged,
    )


def _check_points(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.feature_map.n_qubits:
        raise ShapeError(f"model expects {model.feature_map.n_qubits} features, got {X.shape[1]}")
    return X, single


def decision_scores(model: QSVMModel, X) -> np.ndarray:
    X, _ = _check_points(model, X)
    if model.n_support == 0:
        return np.full(X.shape[0], model.bias)
    Kx = cross_kernel(X, model.support_vectors, model.feature_map, model.kernel_mode, model.seed)
    return Kx @ (2.0 * model.alphas * model.labels) + model.bias


def decision_score(model: QSVMModel, x) -> float:
    x, single = _check_points(model, x)
    if not single:
        raise ShapeError("decision_score takes one feature vector; use decision_scores")
    return float(decision_scores(model, x)[0])


def sign_label(score):
    """+1 for non-negative scores, -1 otherwise (ties go to +1)."""
    return np.where(np.asarray(score) >= 0, 1, -1)


def predict(model: QSVMModel, x) -> int:
    return int(sign_label(decision_score(model, x)))


def predict_many(model: QSVMModel, X) -> np.ndarray:
    return sign_label(decision_scores(model, X))
