"""Quantum-kernel SVM and variational classifier for epitope prediction on a statevector simulator."""

from .circuits import AnsatzSpec, FeatureMapSpec
from .dualsvm import DualProblem, QSVMModel, solve_dual
from .encode import EncodingSpec, load_dataset
from .metrics import EvalReport, evaluate
from .qkernel import KernelMatrix, KernelMode, cross_kernel, kernel_matrix
from .statevector import Statevector, new_zero_state
from .vqc import TrainConfig, VQCModel, train

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec",
    "DualProblem",
    "EncodingSpec",
    "EvalReport",
    "FeatureMapSpec",
    "KernelMatrix",
    "KernelMode",
    "QSVMModel",
    "Statevector",
    "TrainConfig",
    "VQCModel",
    "cross_kernel",
    "evaluate",
    "kernel_matrix",
    "load_dataset",
    "new_zero_state",
    "solve_dual",
    "train",
]
