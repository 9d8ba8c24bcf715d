"""Variational quantum classifier.

A point is classified by preparing ``W(theta) U_phi(x) |0...0>`` and reading
qubit 0: outcome 0 votes for label +1, outcome 1 for label -1. With R shots
the empirical vote shares are ``p_y = r_y / R``; in exact mode they are the
true marginals ``(1 +/- <Z_0>) / 2``.

The per-point error model is the sigmoid estimate

    err(x, y) = sig( sqrt(R) * 2**(-y b) * p / sqrt(2 p (1 - p)) )

where ``p`` is the vote share of the wrong label ``-y`` (clamped to
``[eps, 1 - eps]``) and ``b`` is a bias. The training loss is the dataset mean
of ``err``. Exact mode has no physical R, so a nominal ``error_shots`` stands
in for it.

Gradients use the parameter-shift rule. Every ansatz parameter enters through
one ``exp(-i theta P / 2)`` rotation, so the readout marginal satisfies
``dp/dtheta_j = (p(theta_j + pi/2) - p(theta_j - pi/2)) / 2`` exactly; the
default ``rule="chain"`` combines these shifted circuit evaluations with the
analytic derivative of the sigmoid error. ``rule="loss"`` applies the shift
to the loss value itself, ``(L(theta_j + pi/2) - L(theta_j - pi/2)) / 2``, which
is only an approximation once the loss is non-sinusoidal.

Shot streams: during training, point ``i`` at circuit variant ``m``
(0 = unshifted, ``2j+1`` / ``2j+2`` = parameter ``j`` shifted up / down)
samples from ``make_rng(seed, m, i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from . import circuits
from . import kvformat as kv
from . import statevector as sv
from .circuits import AnsatzSpec, FeatureMapSpec
from .errors import ConfigurationError, DegenerateProblemError, ParseError, ShapeError, SizeError
from .rng import make_rng, vector_key

EPS = 1e-6
DEFAULT_ERROR_SHOTS = 4
SHIFT = math.pi / 2
READOUTS = ("first_qubit_z",)


@dataclass(frozen=True, eq=False)
class VQCModel:
    theta: np.ndarray
    ansatz: AnsatzSpec
    feature_map: FeatureMapSpec
    bias_b: float = 0.0
    readout: str = "first_qubit_z"
    error_shots: int = DEFAULT_ERROR_SHOTS
    seed: int = 0

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.ansatz.n_params:
            raise ShapeError(f"theta has {theta.shape[0]} entries, ansatz needs {self.ansatz.n_params}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if self.ansatz.n_qubits != self.feature_map.n_qubits:
            raise ShapeError("ansatz and feature map widths differ")
        if self.readout not in READOUTS:
            raise ValueError(f"readout must be one of {READOUTS}")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    def with_theta(self, theta, bias_b=None) -> "VQCModel":
        return replace(self, theta=theta, bias_b=self.bias_b if bias_b is None else bias_b)

    def to_kv(self):
        fm = self.feature_map
        return [
            ("format", "qepitope-vqc/1"),
            ("model", "vqc"),
            ("n_qubits", str(fm.n_qubits)),
            ("feature_map.depth", str(fm.depth)),
            ("feature_map.pairs", " ".join(f"{a}-{b}" for a, b in fm.entangling_pairs)),
            ("ansatz.layers", str(self.ansatz.layers)),
            ("ansatz.entangler", self.ansatz.entangler_kind),
            ("readout", self.readout),
            ("error_shots", str(self.error_shots)),
            ("seed", str(self.seed)),
            ("bias_b", kv.fmt_float(self.bias_b)),
            ("theta", kv.fmt_floats(self.theta)),
        ]

    @classmethod
    def from_kv(cls, data, path=None) -> "VQCModel":
        req = lambda key: kv.require(data, key, path)  # noqa: E731
        if req("model") != "vqc":
            raise ParseError("not a vqc model file", path=path)
        try:
            n = int(req("n_qubits"))
            pairs = tuple(
                tuple(int(v) for v in p.split("-")) for p in req("feature_map.pairs").split()
            )
            return cls(
                theta=kv.parse_floats(req("theta")),
                ansatz=AnsatzSpec(n, int(req("ansatz.layers")), req("ansatz.entangler")),
                feature_map=FeatureMapSpec(n, int(req("feature_map.depth")), pairs),
                bias_b=float(req("bias_b")),
                readout=req("readout"),
                error_shots=int(req("error_shots")),
                seed=int(req("seed")),
            )
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"invalid vqc model: {exc}", path=path) from exc


@dataclass(frozen=True)
class EmpiricalDistribution:
    p_plus: float
    p_minus: float
    shots: Optional[int] = None

    def __post_init__(self):
        if not (0.0 <= self.p_plus <= 1.0 and 0.0 <= self.p_minus <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(self.p_plus + self.p_minus - 1.0) > 1e-12:
            raise ValueError("p_plus + p_minus must equal 1")

    def mass(self, label: int) -> float:
        return self.p_plus if label == 1 else self.p_minus


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2.0
    max_epochs: int = 100
    seed: int = 0
    convergence_tol: float = 1e-6
    gradient_shots: Optional[int] = None
    error_shots: int = DEFAULT_ERROR_SHOTS
    gradient_rule: str = "chain"
    train_bias: bool = False
    bias_b: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if int(self.max_epochs) < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if not self.convergence_tol > 0:
            raise ConfigurationError("convergence_tol must be positive")
        if self.gradient_shots is not None and int(self.gradient_shots) < 1:
            raise ConfigurationError("gradient_shots must be >= 1")
        if int(self.error_shots) < 1:
            raise ConfigurationError("error_shots must be >= 1")
        if self.gradient_rule not in ("chain", "loss"):
            raise ConfigurationError("gradient_rule must be 'chain' or 'loss'")


def _labels(y):
    y = np.asarray(y).reshape(-1)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be +1 or -1")
    return y.astype(float)


def _points(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.feature_map.n_qubits:
        raise ShapeError(f"model expects {model.feature_map.n_qubits} features, got {X.shape[1]}")
    return X


def _even_mask(n_qubits):
    return ((np.arange(1 << n_qubits) & 1) == 0)


def _p_plus_grid(model, states0, thetas, shots=None, seed=0, point_keys=None):
    """Readout marginal for every (theta row, point); returns shape ``(M, B)``.

    Shots-mode point ``i`` of variant ``m`` samples from
    ``make_rng(seed, m, point_keys[i])`` (default key: ``i``).
    """
    thetas = np.atleast_2d(thetas)
    M, B = thetas.shape[0], states0.shape[0]
    amps = np.tile(states0, (M, 1))
    circuits.apply_ansatz_batch(amps, np.repeat(thetas, B, axis=0), model.ansatz)
    probs = np.abs(amps) ** 2
    even = _even_mask(model.ansatz.n_qubits)
    if shots is None:
        p = probs[:, even].sum(axis=1)
        return np.clip(p, 0.0, 1.0).reshape(M, B)
    keys = range(B) if point_keys is None else point_keys
    out = np.empty(M * B)
    for r, (m, key) in enumerate((m, k) for m in range(M) for k in keys):
        tallies = sv.sample_outcomes(probs[r], shots, make_rng(seed, m, key))
        out[r] = tallies[even].sum() / shots
    return out.reshape(M, B)


def forward(model: VQCModel, x, shots: Optional[int] = None, seed: int = 0) -> EmpiricalDistribution:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.feature_map.n_qubits:
        raise ShapeError(f"model expects {model.feature_map.n_qubits} features, got shape {x.shape}")
    circ = circuits.build_feature_map(x, model.feature_map) + circuits.build_ansatz(
        model.theta, model.ansatz
    )
    state = circuits.simulate(circ)
    if shots is None:
        p_plus = min(max((1.0 + sv.expectation_z(state, 0)) / 2, 0.0), 1.0)
        return EmpiricalDistribution(p_plus, 1.0 - p_plus, None)
    counts = sv.sample_measurements(state, shots, seed)
    r_plus = sum(c for k, c in counts.counts.items() if k[-1] == "0")
    return EmpiricalDistribution(r_plus / shots, (shots - r_plus) / shots, int(shots))


def forward_many(model: VQCModel, X, shots: Optional[int] = None, seed: int = 0,
                 keyed_by_position: bool = False) -> np.ndarray:
    """p_plus for every row of X.

    In shots mode a row samples from ``make_rng(seed, 0, vector_key(x))``, so
    its result does not depend on where it sits in ``X``; training losses use
    the row position instead (``keyed_by_position=True``).
    """
    X = _points(model, X)
    states0 = circuits.feature_states(X, model.feature_map)
    keys = None if keyed_by_position else [vector_key(x) for x in X]
    return _p_plus_grid(model, states0, model.theta, shots, seed, keys)[0]


_BELOW_ONE = np.nextafter(1.0, 0.0)


def _sigmoid(z):
    # keep the value strictly inside (0, 1) even where 1/(1+e^-z) rounds to 1
    return np.minimum(1.0 / (1.0 + np.exp(-z)), _BELOW_ONE)


def error_from_wrong_mass(p_wrong, y, b, R):
    """Vectorised sigmoid error model; ``p_wrong`` is the mass on label ``-y``."""
    p = np.clip(p_wrong, EPS, 1.0 - EPS)
    z = math.sqrt(R) * np.power(2.0, -np.asarray(y) * b) * p / np.sqrt(2.0 * p * (1.0 - p))
    return _sigmoid(z)


def pointwise_error(dist: EmpiricalDistribution, y: int, b: float, R: int) -> float:
    return float(error_from_wrong_mass(dist.mass(-y), y, b, R))


def _errors_and_slopes(p_plus, y, b, R):
    """Per-point error and its derivatives with respect to p_plus and b."""
    p_wrong = np.where(y > 0, 1.0 - p_plus, p_plus)
    clamped = (p_wrong < EPS) | (p_wrong > 1.0 - EPS)
    p = np.clip(p_wrong, EPS, 1.0 - EPS)
    scale = math.sqrt(R) * np.power(2.0, -y * b)
    z = scale * p / np.sqrt(2.0 * p * (1.0 - p))
    s = _sigmoid(z)
    ds = s * (1.0 - s)
    dh = 1.0 / (2.0 * math.sqrt(2.0) * np.sqrt(p) * (1.0 - p) ** 1.5)
    d_pplus = np.where(clamped, 0.0, ds * scale * dh * (-y))
    d_b = ds * z * (-y * math.log(2.0))
    return s, d_pplus, d_b


def _error_R(model, shots, error_shots):
    if error_shots is not None:
        return int(error_shots)
    return int(shots) if shots is not None else model.error_shots


def _check_data(model, X, y):
    X = _points(model, X)
    y = _labels(y)
    if X.shape[0] == 0:
        raise SizeError("dataset is empty")
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} points vs {y.shape[0]} labels")
    return X, y


def loss(model: VQCModel, X, y, shots: Optional[int] = None, seed: int = 0,
         error_shots: Optional[int] = None) -> float:
    """Mean sigmoid error over the dataset.

    The error model's R is ``error_shots`` if given, else the sampling
    ``shots``, else ``model.error_shots``.
    """
    X, y = _check_data(model, X, y)
    p_plus = forward_many(model, X, shots, seed, keyed_by_position=True)
    R = _error_R(model, shots, error_shots)
    return float(np.mean(error_from_wrong_mass(np.where(y > 0, 1.0 - p_plus, p_plus), y, model.bias_b, R)))


def _shifted_thetas(theta):
    P = theta.shape[0]
    rows = [theta]
    for j in range(P):
        up = theta.copy()
        up[j] += SHIFT
        down = theta.copy()
        down[j] -= SHIFT
        rows += [up, down]
    return np.array(rows)


def gradient(model: VQCModel, X, y, shots: Optional[int] = None, seed: int = 0,
             rule: str = "chain", error_shots: Optional[int] = None, with_bias: bool = False):
    """Parameter-shift gradient of :func:`loss` with respect to theta.

    With ``with_bias=True`` returns ``(grad_theta, dloss_db)``.
    """
    X, y = _check_data(model, X, y)
    states0 = circuits.feature_states(X, model.feature_map)
    return _gradient_from_states(model, states0, y, shots, seed, rule, error_shots, with_bias)[1:]


def _gradient_from_states(model, states0, y, shots, seed, rule, error_shots, with_bias):
    if rule not in ("chain", "loss"):
        raise ConfigurationError("rule must be 'chain' or 'loss'")
    R = _error_R(model, shots, error_shots)
    grid = _p_plus_grid(model, states0, _shifted_thetas(model.theta), shots, seed)
    base, up, down = grid[0], grid[1::2], grid[2::2]
    err, d_pplus, d_b = _errors_and_slopes(base, y, model.bias_b, R)
    if rule == "chain":
        g = ((up - down) / 2.0) @ d_pplus / y.shape[0]
    else:
        err_up = _errors_and_slopes(up, y[None, :], model.bias_b, R)[0].mean(axis=1)
        err_down = _errors_and_slopes(down, y[None, :], model.bias_b, R)[0].mean(axis=1)
        g = (err_up - err_down) / 2.0
    value = float(err.mean())
    if with_bias:
        return value, g, float(d_b.mean())
    return value, g


def train(X, y, feature_map: FeatureMapSpec, ansatz: AnsatzSpec, config: TrainConfig = TrainConfig()
          ) -> Tuple[VQCModel, List[float]]:
    """Full-batch gradient descent from a seeded uniform start in [-pi, pi].

    Returns the final model and the loss recorded at the start of each epoch.
    """
    y_arr = _labels(y)
    if y_arr.size == 0:
        raise SizeError("dataset is empty")
    if not (np.any(y_arr > 0) and np.any(y_arr < 0)):
        raise DegenerateProblemError("training data must contain both classes")
    rng = make_rng(config.seed)
    theta0 = rng.uniform(-math.pi, math.pi, ansatz.n_params)
    model = VQCModel(theta0, ansatz, feature_map, bias_b=config.bias_b,
                     error_shots=config.error_shots, seed=config.seed)
    X = _points(model, X)
    if X.shape[0] != y_arr.shape[0]:
        raise ShapeError(f"{X.shape[0]} points vs {y_arr.shape[0]} labels")
    states0 = circuits.feature_states(X, feature_map)

    trace = []
    theta = theta0.copy()
    b = config.bias_b
    for epoch in range(int(config.max_epochs)):
        value, g, g_b = _gradient_from_states(
            model, states0, y_arr, config.gradient_shots,
            # fresh shot stream per epoch
            int(make_rng(config.seed, epoch).integers(2**62)) if config.gradient_shots else 0,
            config.gradient_rule, None, True,
        )
        trace.append(value)
        norm = float(np.sqrt(g @ g + (g_b * g_b if config.train_bias else 0.0)))
        if norm <= config.convergence_tol:
            break
        theta = theta - config.learning_rate * g
        if config.train_bias:
            b = b - config.learning_rate * g_b
        model = model.with_theta(theta, b)
    return model, trace


def predict(model: VQCModel, x, shots: Optional[int] = None, seed: int = 0) -> int:
    """argmax over the two vote shares; a tie goes to +1."""
    dist = forward(model, x, shots, seed)
    return 1 if dist.p_plus >= dist.p_minus else -1


def predict_many(model: VQCModel, X, shots: Optional[int] = None, seed: int = 0) -> np.ndarray:
    p = forward_many(model, X, shots, seed)
    return np.where(p >= 1.0 - p, 1, -1)
