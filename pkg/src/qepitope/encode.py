"""Peptide datasets, propensity-scale featurisation and train/test splitting.

Each peptide becomes one angle vector: for every propensity scale, the mean
residue value over the whole sequence is standardised with statistics fitted
on the training split, clipped to [-3, 3] standard deviations and mapped
linearly onto [-pi, pi]. One scale per qubit.

Two input tables are understood:

* peptide CSV, header ``sequence,label``
* pre-encoded angle CSV, header ``x0,x1,...,label`` (values already in radians)

Labels are read as +1 / -1, with 0 accepted for -1.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import kvformat as kv
from .errors import ConfigurationError, ParseError, ShapeError, SizeError, StateError
from .rng import make_rng

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"

# Parker, Guo & Hodges (1986) HPLC-derived hydrophilicity.
PARKER_HYDROPHILICITY = {
    "A": 2.1, "R": 4.2, "N": 7.0, "D": 10.0, "C": 1.4, "Q": 6.0, "E": 7.8,
    "G": 5.7, "H": 2.1, "I": -8.0, "L": -9.2, "K": 5.7, "M": -4.2, "F": -9.2,
    "P": 2.1, "S": 6.5, "T": 5.2, "W": -10.0, "Y": -1.9, "V": -3.7,
}

# Kyte & Doolittle (1982) hydropathy.
KYTE_DOOLITTLE = {
    "A": 1.8, "R": -4.5, "N": -3.5, "D": -3.5, "C": 2.5, "Q": -3.5, "E": -3.5,
    "G": -0.4, "H": -3.2, "I": 4.5, "L": 3.8, "K": -3.9, "M": 1.9, "F": 2.8,
    "P": -1.6, "S": -0.8, "T": -0.7, "W": -0.9, "Y": -1.3, "V": 4.2,
}

# Emini et al. (1985) relative surface accessibility.
EMINI_SURFACE = {
    "A": 0.815, "R": 1.475, "N": 1.296, "D": 1.283, "C": 0.394, "Q": 1.348,
    "E": 1.445, "G": 0.714, "H": 1.180, "I": 0.603, "L": 0.603, "K": 1.545,
    "M": 0.714, "F": 0.695, "P": 1.236, "S": 1.115, "T": 1.184, "W": 0.808,
    "Y": 1.089, "V": 0.606,
}

SCALES: Dict[str, Dict[str, float]] = {
    "parker": PARKER_HYDROPHILICITY,
    "kyte_doolittle": KYTE_DOOLITTLE,
    "emini": EMINI_SURFACE,
}

DEFAULT_SCALE_ORDER = ("parker", "kyte_doolittle", "emini")

CLIP_SIGMA = 3.0
STD_FLOOR = 1e-9


@dataclass(frozen=True)
class PeptideRecord:
    sequence: str
    label: int

    def __post_init__(self):
        if not self.sequence:
            raise ValueError("empty sequence")
        bad = sorted(set(self.sequence) - set(AMINO_ACIDS))
        if bad:
            raise ValueError(f"invalid residue(s) {''.join(bad)!r} in {self.sequence!r}")
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


@dataclass(frozen=True)
class Dataset:
    records: Tuple[PeptideRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def t(self) -> int:
        return len(self.records)

    def __len__(self):
        return len(self.records)

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=int)

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices))


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Already-encoded angle vectors with labels."""

    X: np.ndarray
    y: np.ndarray

    @property
    def t(self) -> int:
        return self.X.shape[0]

    def subset(self, indices) -> "FeatureTable":
        idx = np.asarray(indices, dtype=int)
        return FeatureTable(self.X[idx].reshape(len(idx), self.X.shape[1]), self.y[idx])

    @property
    def labels(self) -> np.ndarray:
        return self.y


@dataclass(frozen=True)
class EncodingSpec:
    scales: Tuple[str, ...]
    means: Optional[Tuple[float, ...]] = None
    stds: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        scales = tuple(self.scales)
        if not scales:
            raise ConfigurationError("at least one scale is required")
        for name in scales:
            if name not in SCALES:
                raise ConfigurationError(f"unknown scale {name!r}; known: {sorted(SCALES)}")
        object.__setattr__(self, "scales", scales)
        for attr in ("means", "stds"):
            val = getattr(self, attr)
            if val is not None:
                val = tuple(float(v) for v in val)
                if len(val) != len(scales):
                    raise ShapeError(f"{attr} must have one entry per scale")
                object.__setattr__(self, attr, val)

    @property
    def n_features(self) -> int:
        return len(self.scales)

    @property
    def fitted(self) -> bool:
        return self.means is not None and self.stds is not None

    def to_kv(self):
        items = [("encoding", "peptide"), ("encoding.scales", ",".join(self.scales))]
        if self.fitted:
            items += [
                ("encoding.mean", kv.fmt_floats(self.means)),
                ("encoding.std", kv.fmt_floats(self.stds)),
            ]
        return items

    @classmethod
    def from_kv(cls, data, path=None) -> "EncodingSpec":
        scales = tuple(kv.require(data, "encoding.scales", path).split(","))
        means = stds = None
        if "encoding.mean" in data:
            means = tuple(kv.parse_floats(data["encoding.mean"]))
            stds = tuple(kv.parse_floats(kv.require(data, "encoding.std", path)))
        return cls(scales, means, stds)


def default_encoding(n_features: int) -> EncodingSpec:
    if not 1 <= n_features <= len(DEFAULT_SCALE_ORDER):
        raise ConfigurationError(
            f"peptide encoding supports 1..{len(DEFAULT_SCALE_ORDER)} features, got {n_features}"
        )
    return EncodingSpec(DEFAULT_SCALE_ORDER[:n_features])


def _parse_label(text, lineno, path):
    try:
        value = int(text.strip())
    except ValueError:
        raise ParseError(f"label {text!r} is not an integer", line=lineno, path=path) from None
    if value == 0:
        return -1
    if value not in (1, -1):
        raise ParseError(f"label must be 1, -1 or 0, got {value}", line=lineno, path=path)
    return value


def _data_lines(path):
    """Yield ``(lineno, stripped line)`` for non-blank, non-comment lines."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def read_header(path) -> List[str]:
    for _, line in _data_lines(path):
        return [c.strip().lower() for c in line.split(",")]
    raise ParseError("file has no header", path=path)


def load_dataset(path) -> Dataset:
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("file has no header", path=path) from None
    if [c.strip().lower() for c in header.split(",")] != ["sequence", "label"]:
        raise ParseError("header must be 'sequence,label'", line=lineno, path=path)
    records = []
    for lineno, line in lines:
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 columns, got {len(parts)}", line=lineno, path=path)
        seq = parts[0].strip().upper()
        label = _parse_label(parts[1], lineno, path)
        try:
            records.append(PeptideRecord(seq, label))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
    return Dataset(tuple(records))


def load_feature_table(path) -> FeatureTable:
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("file has no header", path=path) from None
    cols = [c.strip().lower() for c in header.split(",")]
    if len(cols) < 2 or cols[-1] != "label":
        raise ParseError("header must be 'x0,...,label'", line=lineno, path=path)
    d = len(cols) - 1
    X, y = [], []
    for lineno, line in lines:
        parts = line.split(",")
        if len(parts) != d + 1:
            raise ParseError(f"expected {d + 1} columns, got {len(parts)}", line=lineno, path=path)
        try:
            row = [float(v) for v in parts[:-1]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno, path=path) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite feature", line=lineno, path=path)
        X.append(row)
        y.append(_parse_label(parts[-1], lineno, path))
    return FeatureTable(np.array(X, dtype=float).reshape(len(X), d), np.array(y, dtype=int))


def raw_features(record: PeptideRecord, spec: EncodingSpec) -> np.ndarray:
    return np.array(
        [np.mean([SCALES[name][aa] for aa in record.sequence]) for name in spec.scales]
    )


def fit_normalization(train: Dataset, spec: EncodingSpec) -> EncodingSpec:
    if train.t < 2:
        raise SizeError(f"need at least 2 training records to fit, got {train.t}")
    raw = np.array([raw_features(r, spec) for r in train.records])
    # fsum is correctly rounded, so the statistics do not depend on record order
    t = raw.shape[0]
    means = [math.fsum(col) / t for col in raw.T]
    stds = [
        max(math.sqrt(math.fsum((col - m) ** 2) / t), STD_FLOOR)
        for col, m in zip(raw.T, means)
    ]
    return replace(spec, means=tuple(means), stds=tuple(stds))


def to_angles(raw, spec: EncodingSpec) -> np.ndarray:
    if not spec.fitted:
        raise StateError("encoding normalisation has not been fitted")
    z = (np.asarray(raw, dtype=float) - np.array(spec.means)) / np.array(spec.stds)
    return np.clip(z, -CLIP_SIGMA, CLIP_SIGMA) * (math.pi / CLIP_SIGMA)


def featurize(record: PeptideRecord, spec: EncodingSpec) -> np.ndarray:
    if not spec.fitted:
        raise StateError("encoding normalisation has not been fitted")
    return to_angles(raw_features(record, spec), spec)


def featurize_dataset(data: Dataset, spec: EncodingSpec) -> np.ndarray:
    if not spec.fitted:
        raise StateError("encoding normalisation has not been fitted")
    if data.t == 0:
        return np.zeros((0, spec.n_features))
    return np.array([featurize(r, spec) for r in data.records])


def _round_half_up(v):
    return int(math.floor(v + 0.5))


def split_indices(labels, test_fraction: float, seed: int, stratified: bool = True):
    """Return ``(train_idx, test_idx)``, each in ascending order."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = np.asarray(labels)
    t = labels.shape[0]
    if t < 4:
        raise SizeError(f"need at least 4 records to split, got {t}")
    n_test = min(max(_round_half_up(t * test_fraction), 1), t - 1)
    rng = make_rng(seed)
    if not stratified:
        perm = rng.permutation(t)
        test = np.sort(perm[:n_test])
    else:
        classes = [c for c in (1, -1) if np.any(labels == c)]
        if len(classes) < 2:
            raise SizeError("stratified split needs both classes")
        members = [np.flatnonzero(labels == c) for c in classes]
        # largest-remainder apportionment of n_test across classes
        exact = [len(m) * n_test / t for m in members]
        quota = [int(math.floor(e)) for e in exact]
        order = sorted(range(len(classes)), key=lambda k: -(exact[k] - quota[k]))
        for k in order[: n_test - sum(quota)]:
            quota[k] += 1
        test = np.sort(
            np.concatenate([rng.permutation(m)[:q] for m, q in zip(members, quota)])
        )
    mask = np.zeros(t, dtype=bool)
    mask[test] = True
    return np.flatnonzero(~mask), test


def split(data, test_fraction: float, seed: int, stratified: bool = True):
    train_idx, test_idx = split_indices(data.labels, test_fraction, seed, stratified)
    return data.subset(train_idx), data.subset(test_idx)
