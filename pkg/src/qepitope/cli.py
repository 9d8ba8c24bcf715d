"""Command-line driver: ``kernel``, ``train``, ``eval`` and ``report``.

Settings resolve as command-line flag, then JSON config file (``--config``),
then the defaults in :class:`RunConfig`. A seed is mandatory.

Every run directory holds ``report.json``, ``model.txt``, ``timings.json``
and either ``kernel.txt`` (qsvm) or ``loss_trace.txt`` (vqc). Everything
except ``timings.json`` is a pure function of the resolved configuration.

Exit status: 0 success, 1 empty or degenerate input, 2 usage or validation
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import dualsvm, encode, metrics, qkernel, vqc
from . import kvformat as kv
from .circuits import ENTANGLER_KINDS, AnsatzSpec, FeatureMapSpec
from .datasets import bundled_path
from .errors import (
    ConfigurationError,
    DegenerateProblemError,
    NumericalError,
    ParseError,
    QepitopeError,
    SizeError,
)

OUT_ENV = "QEPITOPE_OUT"
REPORT_KIND = "qepitope-run-report"

EXIT_OK, EXIT_EMPTY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class ValidationError(QepitopeError, ValueError):
    pass


@dataclass
class RunConfig:
    dataset_path: str = field(default_factory=lambda: bundled_path("sample_epitopes.csv"))
    model: str = "qsvm"
    n_qubits: int = 2
    depth: int = 2
    entangler_kind: str = "cz_ring"
    layers: int = 2
    shots: str = "exact"
    C: float = 1.0
    tol: float = 1e-6
    learning_rate: float = 2.0
    max_epochs: int = 100
    error_shots: int = vqc.DEFAULT_ERROR_SHOTS
    test_fraction: float = 0.3
    seed: Optional[int] = None
    output_dir: Optional[str] = None

    def validate(self):
        if self.seed is None:
            raise ValidationError("a seed is required (--seed or 'seed' in the config file)")
        if int(self.seed) < 0:
            raise ValidationError("seed must be non-negative")
        if self.model not in ("qsvm", "vqc"):
            raise ValidationError(f"model must be qsvm or vqc, got {self.model!r}")
        if self.entangler_kind not in ENTANGLER_KINDS:
            raise ValidationError(f"entangler must be one of {ENTANGLER_KINDS}")
        if self.n_qubits < 1 or (self.model == "vqc" and self.n_qubits < 2):
            raise ValidationError("vqc needs at least 2 qubits, qsvm at least 1")
        if self.depth < 1 or self.layers < 1 or self.max_epochs < 1:
            raise ValidationError("depth, layers and epochs must be >= 1")
        if not (self.C > 0 and self.tol > 0 and self.learning_rate > 0):
            raise ValidationError("C, tol and learning rate must be positive")
        if not 0 < self.test_fraction < 1:
            raise ValidationError("test fraction must be in (0, 1)")
        qkernel.KernelMode.parse(self.shots)

    @property
    def kernel_mode(self) -> qkernel.KernelMode:
        return qkernel.KernelMode.parse(self.shots)

    def feature_map(self) -> FeatureMapSpec:
        return FeatureMapSpec(self.n_qubits, self.depth)

    def run_dir(self) -> str:
        if self.output_dir:
            return self.output_dir
        base = os.environ.get(OUT_ENV, "runs")
        return os.path.join(base, f"{self.model}-seed{self.seed}")

    def echo(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["C"] = "inf" if math.isinf(self.C) else self.C
        return d


_CASTS = {
    "model": str, "dataset_path": str, "entangler_kind": str, "shots": str, "output_dir": str,
    "n_qubits": int, "depth": int, "layers": int, "max_epochs": int, "error_shots": int, "seed": int,
    "C": float, "tol": float, "learning_rate": float, "test_fraction": float,
}


def load_config_file(path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}", path=path) from None
    if not isinstance(raw, dict):
        raise ParseError("config must be a JSON object", path=path)
    out = {}
    for key, value in raw.items():
        if key not in _CASTS:
            raise ValidationError(f"unknown config key {key!r}")
        try:
            out[key] = _CASTS[key](value) if value is not None else None
        except (TypeError, ValueError):
            raise ValidationError(f"config key {key!r} has invalid value {value!r}") from None
    return out


_FLAG_TO_FIELD = {
    "data": "dataset_path", "model": "model", "qubits": "n_qubits", "depth": "depth",
    "entangler": "entangler_kind", "layers": "layers", "shots": "shots", "c": "C", "tol": "tol",
    "lr": "learning_rate", "epochs": "max_epochs", "error_shots": "error_shots",
    "test_fraction": "test_fraction", "seed": "seed", "out": "output_dir",
}


def resolve_config(args) -> RunConfig:
    values: Dict[str, Any] = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for flag, name in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# -- data --------------------------------------------------------------------

@dataclass
class PreparedData:
    kind: str  # "peptide" or "angles"
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    encoding: Optional[encode.EncodingSpec]
    n_total: int


def load_table(path):
    if not os.path.exists(path):
        raise ValidationError(f"dataset not found: {path}")
    header = encode.read_header(path)
    if header == ["sequence", "label"]:
        return "peptide", encode.load_dataset(path)
    return "angles", encode.load_feature_table(path)


def prepare(cfg: RunConfig) -> PreparedData:
    kind, table = load_table(cfg.dataset_path)
    if table.t == 0:
        raise SizeError(f"{cfg.dataset_path}: no records")
    labels = table.labels
    if not (np.any(labels > 0) and np.any(labels < 0)):
        raise DegenerateProblemError(f"{cfg.dataset_path}: only one class present")
    train_idx, test_idx = encode.split_indices(labels, cfg.test_fraction, cfg.seed, stratified=True)
    train, test = table.subset(train_idx), table.subset(test_idx)
    if kind == "peptide":
        spec = encode.fit_normalization(train, encode.default_encoding(cfg.n_qubits))
        Xtr, Xte = encode.featurize_dataset(train, spec), encode.featurize_dataset(test, spec)
    else:
        if table.X.shape[1] != cfg.n_qubits:
            raise ValidationError(
                f"{cfg.dataset_path} has {table.X.shape[1]} features but --qubits is {cfg.n_qubits}"
            )
        spec = None
        Xtr, Xte = train.X, test.X
    return PreparedData(kind, Xtr, train.labels, Xte, test.labels, spec, table.t)


# -- models on disk ----------------------------------------------------------

def model_text(model, encoding) -> str:
    items = list(model.to_kv())
    items += encoding.to_kv() if encoding is not None else [("encoding", "angles")]
    return kv.dumps(items)


def parse_model_text(text, path=None):
    data = kv.loads(text, path)
    kind = kv.require(data, "model", path)
    if kind == "qsvm":
        model = dualsvm.QSVMModel.from_kv(data, path)
    elif kind == "vqc":
        model = vqc.VQCModel.from_kv(data, path)
    else:
        raise ParseError(f"unknown model kind {kind!r}", path=path)
    encoding = None
    if kv.require(data, "encoding", path) == "peptide":
        encoding = encode.EncodingSpec.from_kv(data, path)
    return kind, model, encoding


def load_model(path):
    if not os.path.exists(path):
        raise ValidationError(f"model file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_model_text(fh.read(), path)


# -- evaluation --------------------------------------------------------------

def score_and_predict(kind, model, X, shots_mode: qkernel.KernelMode, seed: int):
    """Returns ``(predictions, ranking scores)``."""
    if kind == "qsvm":
        scores = dualsvm.decision_scores(model, X)
        return dualsvm.sign_label(scores), scores
    shots = None if shots_mode.exact else shots_mode.shots
    preds = vqc.predict_many(model, X, shots, seed)
    return preds, vqc.forward_many(model, X)


def _majority_baseline(y_train, y_test):
    majority = 1 if np.sum(y_train > 0) >= np.sum(y_train < 0) else -1
    return float(np.mean(y_test == majority))


def _eval_block(kind, model, X, y, mode, seed):
    preds, scores = score_and_predict(kind, model, X, mode, seed)
    if len(np.unique(y)) < 2:
        raise DegenerateProblemError("evaluation data needs both classes for AUC")
    return metrics.evaluate(y, preds, scores, kind), preds


@dataclass
class RunReport:
    command: str
    model_kind: str
    config: Dict[str, Any]
    data: Dict[str, Any]
    evaluation: metrics.EvalReport
    train_accuracy: Optional[float]
    majority_baseline_accuracy: Optional[float]
    training: Dict[str, Any]
    artifacts: Dict[str, Optional[str]]
    reference_rows: List[Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": REPORT_KIND,
            "version": 1,
            "command": self.command,
            "model_kind": self.model_kind,
            "config": self.config,
            "data": self.data,
            "evaluation": self.evaluation.to_dict(),
            "train_accuracy": self.train_accuracy,
            "majority_baseline_accuracy": self.majority_baseline_accuracy,
            "training": self.training,
            "artifacts": self.artifacts,
            "reference_rows": self.reference_rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d) -> "RunReport":
        if d.get("kind") != REPORT_KIND:
            raise ParseError("not a run report")
        return cls(
            command=d["command"],
            model_kind=d["model_kind"],
            config=d["config"],
            data=d["data"],
            evaluation=metrics.EvalReport.from_dict(d["evaluation"]),
            train_accuracy=d["train_accuracy"],
            majority_baseline_accuracy=d["majority_baseline_accuracy"],
            training=d["training"],
            artifacts=d["artifacts"],
            reference_rows=d["reference_rows"],
        )

    @classmethod
    def from_json(cls, text, path=None) -> "RunReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", path=path) from None
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise ParseError(str(exc), path=path) from None
            raise ParseError(f"malformed report: {exc!r}", path=path) from None


def reference_rows():
    return [
        {"method": m, "year": yr, "acc": a, "auc": u, "mcc": c}
        for m, yr, a, u, c in metrics.REFERENCE_ROWS
    ]


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- commands ----------------------------------------------------------------

def cmd_kernel(cfg: RunConfig, stdout=None) -> str:
    stdout = stdout or sys.stdout
    data = prepare(cfg)
    K = qkernel.kernel_matrix(data.X_train, cfg.feature_map(), cfg.kernel_mode, cfg.seed)
    out = cfg.run_dir()
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "kernel.txt")
    qkernel.write_kernel_dump(K, path)
    print(f"t={K.size} mode={cfg.kernel_mode} -> {path}", file=stdout)
    return path


def cmd_train(cfg: RunConfig, stdout=None) -> RunReport:
    stdout = stdout or sys.stdout
    timings = {}
    t0 = time.perf_counter()
    data = prepare(cfg)
    timings["prepare_s"] = time.perf_counter() - t0
    out = cfg.run_dir()
    os.makedirs(out, exist_ok=True)
    fm = cfg.feature_map()
    mode = cfg.kernel_mode
    artifacts = {"model": "model.txt", "kernel_dump": None, "loss_trace": None, "timings": "timings.json"}

    t0 = time.perf_counter()
    if cfg.model == "qsvm":
        K = qkernel.kernel_matrix(data.X_train, fm, mode, cfg.seed)
        _write(os.path.join(out, "kernel.txt"), qkernel.format_kernel_dump(K))
        artifacts["kernel_dump"] = "kernel.txt"
        repaired = qkernel.needs_repair(K)
        if repaired:
            K = qkernel.regularize_psd(K)
        sol = dualsvm.solve_dual(dualsvm.DualProblem(K, data.y_train, cfg.C, cfg.tol))
        if not np.all(np.isfinite(sol.alphas)) or not math.isfinite(sol.bias):
            raise NumericalError("dual solver produced non-finite multipliers")
        model = dualsvm.make_model(data.X_train, data.y_train, sol, fm, mode, cfg.seed, cfg.C, cfg.tol)
        training = {
            "converged": sol.converged,
            "iterations": sol.iterations,
            "warning": sol.warning,
            "objective": sol.objective,
            "n_support": len(sol.support_indices),
            "psd_repaired": repaired,
        }
    else:
        ansatz = AnsatzSpec(cfg.n_qubits, cfg.layers, cfg.entangler_kind)
        tcfg = vqc.TrainConfig(
            learning_rate=cfg.learning_rate, max_epochs=cfg.max_epochs,
            seed=cfg.seed, error_shots=cfg.error_shots,
        )
        model, trace = vqc.train(data.X_train, data.y_train, fm, ansatz, tcfg)
        if not all(math.isfinite(v) for v in trace):
            raise NumericalError("loss became non-finite")
        _write(os.path.join(out, "loss_trace.txt"),
               "".join(f"{e} {kv.fmt_float(v)}\n" for e, v in enumerate(trace, 1)))
        artifacts["loss_trace"] = "loss_trace.txt"
        training = {
            "epochs_run": len(trace),
            "initial_loss": trace[0],
            "final_loss": trace[-1],
            "converged": len(trace) < cfg.max_epochs,
            "warning": None,
        }
    timings["train_s"] = time.perf_counter() - t0

    text = model_text(model, data.encoding)
    _write(os.path.join(out, "model.txt"), text)
    # evaluate the model exactly as persisted
    _, model, _ = parse_model_text(text)

    t0 = time.perf_counter()
    evaluation, _ = _eval_block(cfg.model, model, data.X_test, data.y_test, mode, cfg.seed)
    train_preds, _ = score_and_predict(cfg.model, model, data.X_train, mode, cfg.seed)
    timings["evaluate_s"] = time.perf_counter() - t0

    report = RunReport(
        command="train",
        model_kind=cfg.model,
        config=cfg.echo(),
        data={
            "format": data.kind,
            "n_total": data.n_total,
            "n_train": int(len(data.y_train)),
            "n_test": int(len(data.y_test)),
        },
        evaluation=evaluation,
        train_accuracy=float(np.mean(train_preds == data.y_train)),
        majority_baseline_accuracy=_majority_baseline(data.y_train, data.y_test),
        training=training,
        artifacts=artifacts,
        reference_rows=reference_rows(),
    )
    _write(os.path.join(out, "report.json"), report.to_json())
    _write(os.path.join(out, "timings.json"), json.dumps(timings, indent=2) + "\n")
    e = report.evaluation
    print(f"{cfg.model}: acc={e.acc:.4f} auc={e.auc:.4f} mcc={e.mcc:.4f} -> {out}", file=stdout)
    return report


def cmd_eval(model_path, dataset_path, output_dir=None, stdout=None) -> RunReport:
    stdout = stdout or sys.stdout
    kind, model, encoding = load_model(model_path)
    table_kind, table = load_table(dataset_path)
    if table.t == 0:
        raise SizeError(f"{dataset_path}: no records")
    n = model.feature_map.n_qubits
    if table_kind == "peptide":
        if encoding is None:
            raise ValidationError("model was trained on angle vectors, data is peptides")
        if encoding.n_features != n:
            raise ValidationError("encoding and model widths differ")
        X = encode.featurize_dataset(table, encoding)
    else:
        if encoding is not None:
            raise ValidationError("model was trained on peptides, data is angle vectors")
        if table.X.shape[1] != n:
            raise ValidationError(f"data has {table.X.shape[1]} features, model expects {n}")
        X = table.X
    mode = model.kernel_mode if kind == "qsvm" else qkernel.EXACT
    evaluation, _ = _eval_block(kind, model, X, table.labels, mode, model.seed)
    report = RunReport(
        command="eval",
        model_kind=kind,
        config={"model_path": model_path, "dataset_path": dataset_path},
        data={"format": table_kind, "n_total": table.t, "n_train": None, "n_test": table.t},
        evaluation=evaluation,
        train_accuracy=None,
        majority_baseline_accuracy=None,
        training={},
        artifacts={},
        reference_rows=reference_rows(),
    )
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        _write(os.path.join(output_dir, "eval_report.json"), report.to_json())
    stdout.write(report.to_json())
    return report


def _fmt_metric(v):
    if v is None:
        return "-"
    if isinstance(v, str):
        return v
    return f"{v:.3f}"


def render_table(rows) -> str:
    header = ("method", "ACC", "AUC", "MCC")
    body = [tuple(_fmt_metric(c) if i else c for i, c in enumerate(r)) for r in rows]
    widths = [max(len(str(r[i])) for r in [header] + body) for i in range(4)]
    line = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    out = [line(header), line(tuple("-" * w for w in widths))]
    out += [line(r) for r in body]
    return "\n".join(out) + "\n"


def cmd_report(run_dir, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    paths = sorted(glob.glob(os.path.join(run_dir, "**", "*report.json"), recursive=True))
    rows, failed = [], 0
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                rep = RunReport.from_json(fh.read(), path)
        except (OSError, ParseError) as exc:
            print(f"error: {exc}", file=stderr)
            failed += 1
            continue
        e = rep.evaluation
        label = f"{rep.model_kind} [{os.path.relpath(os.path.dirname(path), run_dir)}]"
        if rep.command == "eval":
            label += " (eval)"
        rows.append((label, e.acc, e.auc, e.mcc))
    if not rows:
        print(f"no readable run reports under {run_dir}", file=stderr)
        return EXIT_EMPTY
    rows += [(f"{m} ({yr})", a, u, c or "-") for m, yr, a, u, c in metrics.REFERENCE_ROWS]
    stdout.write(render_table(rows))
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def _shots_arg(text):
    try:
        return str(qkernel.KernelMode.parse(text))
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_run_flags(p, with_model=True):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--data", help="dataset CSV (default: bundled sample_epitopes.csv)")
    if with_model:
        p.add_argument("--model", choices=("qsvm", "vqc"))
    p.add_argument("--shots", type=_shots_arg, help="'exact' or a shot count R")
    p.add_argument("--seed", type=int)
    p.add_argument("--qubits", type=int)
    p.add_argument("--depth", type=int, help="feature-map repetitions")
    p.add_argument("--entangler", choices=ENTANGLER_KINDS)
    p.add_argument("--layers", type=int, help="ansatz entangling layers (vqc)")
    p.add_argument("--c", type=float, help="box bound C (inf allowed)")
    p.add_argument("--tol", type=float)
    p.add_argument("--lr", type=float, help="learning rate (vqc)")
    p.add_argument("--epochs", type=int, help="maximum epochs (vqc)")
    p.add_argument("--error-shots", dest="error_shots", type=int,
                   help="nominal R in the exact-mode error model (vqc)")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--out", help=f"run directory (default: ${OUT_ENV}/<model>-seed<seed> or runs/...)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qepitope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("kernel", help="dump the training-split kernel matrix"), with_model=False)
    _add_run_flags(sub.add_parser("train", help="train and evaluate a qsvm or vqc"))
    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("model_path")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p = sub.add_parser("report", help="tabulate run reports next to the reference rows")
    p.add_argument("run_dir")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "kernel":
            cmd_kernel(resolve_config(args))
        elif args.command == "train":
            cmd_train(resolve_config(args))
        elif args.command == "eval":
            cmd_eval(args.model_path, args.data, args.out)
        else:
            return cmd_report(args.run_dir)
    except (DegenerateProblemError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
