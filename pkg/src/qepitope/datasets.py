"""Bundled example data and the generators that produce it.

``synthetic_separable.csv``
    80 two-dimensional angle vectors labelled by a hidden reference VQC
    (2 qubits, feature-map depth 2, 2 cz_ring layers, theta drawn from
    ``make_rng(seed)``). Only points whose reference vote share is at least
    0.15 away from 1/2 are kept. Rows 0-39 are the training half (20 per
    class), rows 40-79 the test half (20 per class).

``sample_epitopes.csv``
    100 synthetic peptides (50 per class, lengths 8-20). Positives draw
    residues from a hydrophilic, surface-exposed composition and negatives
    from a hydrophobic one, each 60% diluted by a uniform background, so the
    classes overlap.

Regenerate with ``python scripts/make_datasets.py``.
"""

from __future__ import annotations

import math
import os
from importlib import resources

import numpy as np

from .circuits import AnsatzSpec, FeatureMapSpec
from .encode import AMINO_ACIDS
from .kvformat import fmt_float
from .rng import make_rng

SYNTHETIC_SEED = 2025
SAMPLE_SEED = 1729
MARGIN = 0.15
REFERENCE_FEATURE_MAP = FeatureMapSpec(2, 2)
REFERENCE_ANSATZ = AnsatzSpec(2, 2, "cz_ring")


def bundled_path(name: str) -> str:
    return str(resources.files("qepitope") / "data" / name)


def reference_model(seed: int = SYNTHETIC_SEED):
    from .vqc import VQCModel

    theta = make_rng(seed).uniform(-math.pi, math.pi, REFERENCE_ANSATZ.n_params)
    return VQCModel(theta, REFERENCE_ANSATZ, REFERENCE_FEATURE_MAP)


def make_synthetic_separable(seed: int = SYNTHETIC_SEED, per_class: int = 40):
    """Return ``(X, y)`` ordered as train half then test half."""
    from .vqc import forward_many

    ref = reference_model(seed)
    rng = make_rng(seed, 1)
    pos, neg = [], []
    while len(pos) < per_class or len(neg) < per_class:
        X = rng.uniform(-math.pi, math.pi, (256, 2))
        X = np.array([[float(fmt_float(v)) for v in row] for row in X])
        p = forward_many(ref, X)
        for x, pp in zip(X, p):
            if abs(pp - 0.5) < MARGIN:
                continue
            bucket = pos if pp > 0.5 else neg
            if len(bucket) < per_class:
                bucket.append(x)
    half = per_class // 2
    X = np.array(pos[:half] + neg[:half] + pos[half:] + neg[half:])
    y = np.array([1] * half + [-1] * half + [1] * (per_class - half) + [-1] * (per_class - half))
    return X, y


_HYDROPHILIC = "DEKRNQSGPT"
_HYDROPHOBIC = "LIVFMAWCY"


def _composition(favoured: str, weight: float = 0.4):
    p = np.full(len(AMINO_ACIDS), (1 - weight) / len(AMINO_ACIDS))
    for aa in favoured:
        p[AMINO_ACIDS.index(aa)] += weight / len(favoured)
    return p / p.sum()


def make_sample_epitopes(seed: int = SAMPLE_SEED, per_class: int = 50):
    """Return a list of ``(sequence, label)`` with classes interleaved."""
    rng = make_rng(seed)
    comp = {1: _composition(_HYDROPHILIC), -1: _composition(_HYDROPHOBIC)}
    rows = []
    for _ in range(per_class):
        for label in (1, -1):
            length = int(rng.integers(8, 21))
            idx = rng.choice(len(AMINO_ACIDS), size=length, p=comp[label])
            rows.append(("".join(AMINO_ACIDS[i] for i in idx), label))
    return rows


def write_synthetic_separable(path, seed: int = SYNTHETIC_SEED):
    X, y = make_synthetic_separable(seed)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# hidden reference VQC, seed {seed}, margin >= {MARGIN}; rows 1-40 train, 41-80 test\n")
        fh.write("x0,x1,label\n")
        for row, label in zip(X, y):
            fh.write(f"{fmt_float(row[0])},{fmt_float(row[1])},{label}\n")


def write_sample_epitopes(path, seed: int = SAMPLE_SEED):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# synthetic peptides, seed {seed}; see qepitope.datasets\n")
        fh.write("sequence,label\n")
        for seq, label in make_sample_epitopes(seed):
            fh.write(f"{seq},{label}\n")


def write_all(directory):
    os.makedirs(directory, exist_ok=True)
    write_synthetic_separable(os.path.join(directory, "synthetic_separable.csv"))
    write_sample_epitopes(os.path.join(directory, "sample_epitopes.csv"))
