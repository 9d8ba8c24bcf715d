import math

import numpy as np
import pytest

from qepitope import gates as G

ROTATION_KINDS = ("RX", "RY", "RZ")
ALL_KINDS = ("H", "X", "Y", "Z", "RX", "RY", "RZ", "CNOT", "CZ", "SWAP")


def random_gate(rng, n, kinds=ALL_KINDS):
    kind = kinds[rng.integers(len(kinds))]
    if kind in ("CNOT", "CZ", "SWAP"):
        if n < 2:
            kind = "H"
        else:
            a, b = rng.choice(n, size=2, replace=False)
            return G.Gate(kind, (int(a), int(b)))
    q = int(rng.integers(n))
    angle = float(rng.uniform(-2 * math.pi, 2 * math.pi)) if kind in ROTATION_KINDS else None
    return G.Gate(kind, (q,), angle)


def random_circuit(rng, n, depth, kinds=ALL_KINDS):
    return [random_gate(rng, n, kinds) for _ in range(depth)]


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record one pass/fail line for an acceptance criterion."""

    def record(name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
