import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qepitope import gates as G
from qepitope.circuits import (
    AnsatzSpec,
    Circuit,
    FeatureMapSpec,
    apply_ansatz_batch,
    build_ansatz,
    build_entangler,
    build_feature_map,
    build_kernel_circuit,
    feature_states,
    invert,
    simulate,
)
from qepitope.errors import ParseError, ShapeError, SizeError, WiringError
from qepitope.statevector import Statevector, inner_product, new_zero_state

from conftest import random_circuit, random_state
from oracles import dense_run, reduced_purity_2q

PI = math.pi


def angles(rng, n):
    return rng.uniform(-PI, PI, n)


class TestCircuitType:
    def test_wiring_checked(self):
        with pytest.raises(WiringError):
            Circuit(2, [G.H(2)])

    def test_text_round_trip(self, rng):
        c = Circuit(3, random_circuit(rng, 3, 25))
        assert Circuit.from_text(3, c.to_text()) == c

    def test_text_format(self):
        c = Circuit(2, [G.H(0), G.CNOT(0, 1), G.RZ(1, 0.5)])
        assert c.to_text() == "H 0\nCNOT 0,1\nRZ 1(0.5)\n"

    def test_bad_text(self):
        with pytest.raises(ParseError):
            Circuit.from_text(2, "H 0\nFOO 1\n")

    def test_concatenate_width_mismatch(self):
        with pytest.raises(ShapeError):
            Circuit(1) + Circuit(2)


class TestFeatureMap:
    def test_zero_input_depth_one(self):
        c = build_feature_map([0.0, 0.0], FeatureMapSpec(2, depth=1, entangling_pairs=[(0, 1)]))
        assert list(c.gates) == [
            G.H(0), G.H(1), G.RZ(0, 0.0), G.RZ(1, 0.0),
            G.CNOT(0, 1), G.RZ(1, 2 * PI**2), G.CNOT(0, 1),
        ]

    def test_depth_doubles_gate_count(self, rng):
        x = angles(rng, 3)
        one = build_feature_map(x, FeatureMapSpec(3, depth=1))
        two = build_feature_map(x, FeatureMapSpec(3, depth=2))
        assert len(two) == 2 * len(one)
        assert two.gates[: len(one)] == one.gates

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            build_feature_map([0.1, 0.2, 0.3], FeatureMapSpec(2))

    def test_default_pairs_linear_chain(self):
        assert FeatureMapSpec(4).entangling_pairs == ((0, 1), (1, 2), (2, 3))
        assert FeatureMapSpec(1).entangling_pairs == ()

    def test_bad_pair(self):
        with pytest.raises(ShapeError):
            FeatureMapSpec(2, entangling_pairs=[(0, 2)])

    def test_deterministic(self, rng):
        x = angles(rng, 3)
        spec = FeatureMapSpec(3)
        assert build_feature_map(x, spec) == build_feature_map(x.copy(), spec)

    def test_batched_states_match_gate_list(self, rng):
        spec = FeatureMapSpec(3, depth=2, entangling_pairs=[(0, 1), (1, 2), (0, 2)])
        X = rng.uniform(-PI, PI, (6, 3))
        batch = feature_states(X, spec)
        for row, x in zip(batch, X):
            want = dense_run(build_feature_map(x, spec).gates, 3)
            assert np.max(np.abs(row - want)) <= 1e-12


class TestEntangler:
    def test_ring_three(self):
        assert list(build_entangler(3, "cz_ring").gates) == [G.CZ(0, 1), G.CZ(1, 2), G.CZ(2, 0)]

    def test_ring_two_drops_wraparound(self):
        assert list(build_entangler(2, "cz_ring").gates) == [G.CZ(0, 1)]

    def test_swap_chain_six_has_five(self):
        c = build_entangler(6, "swap_chain")
        assert len(c) == 5 and all(g.kind == "SWAP" for g in c.gates)

    def test_too_small(self):
        with pytest.raises(SizeError):
            build_entangler(1, "cz_ring")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_entangler(3, "iswap")


class TestAnsatz:
    def test_counts_two_qubits_one_layer(self):
        spec = AnsatzSpec(2, 1)
        c = build_ansatz(np.zeros(spec.n_params), spec)
        rot = [g for g in c.gates if g.kind in ("RY", "RZ")]
        assert len(rot) == 8
        assert [g.kind for g in c.gates if g.kind not in ("RY", "RZ")] == ["CZ"]

    def test_three_qubits_two_layers(self):
        assert AnsatzSpec(3, 2).n_params == 18

    @pytest.mark.parametrize("n", range(2, 7))
    @pytest.mark.parametrize("layers", range(1, 5))
    def test_parameter_count_formula(self, n, layers):
        for kind in ("cz_ring", "swap_chain"):
            spec = AnsatzSpec(n, layers, kind)
            c = build_ansatz(np.zeros(spec.n_params), spec)
            n_rot = sum(g.kind in ("RY", "RZ") for g in c.gates)
            assert spec.n_params == n_rot == 2 * n * (layers + 1)

    def test_zero_theta_fixes_zero_state(self):
        spec = AnsatzSpec(3, 2, "cz_ring")
        s = simulate(build_ansatz(np.zeros(spec.n_params), spec))
        assert abs(abs(s.amplitudes[0]) - 1) <= 1e-12

    def test_block_order(self):
        spec = AnsatzSpec(2, 1)
        theta = np.arange(8.0)
        kinds = [(g.kind, g.qubits, g.angle) for g in build_ansatz(theta, spec).gates]
        assert kinds == [
            ("RY", (0,), 0.0), ("RZ", (0,), 1.0), ("RY", (1,), 2.0), ("RZ", (1,), 3.0),
            ("CZ", (0, 1), None),
            ("RY", (0,), 4.0), ("RZ", (0,), 5.0), ("RY", (1,), 6.0), ("RZ", (1,), 7.0),
        ]

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            build_ansatz(np.zeros(7), AnsatzSpec(2, 1))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            build_ansatz([np.nan] + [0.0] * 7, AnsatzSpec(2, 1))

    def test_needs_two_qubits(self):
        with pytest.raises(SizeError):
            AnsatzSpec(1)

    def test_batched_matches_gate_list(self, rng):
        spec = AnsatzSpec(3, 2, "swap_chain")
        thetas = rng.uniform(-PI, PI, (4, spec.n_params))
        amps = np.array([random_state(rng, 3) for _ in range(4)])
        start = amps.copy()
        apply_ansatz_batch(amps, thetas, spec)
        for k in range(4):
            want = dense_run(build_ansatz(thetas[k], spec).gates, 3, start[k])
            assert np.max(np.abs(amps[k] - want)) <= 1e-12

    def test_swap_chain_keeps_product_states(self, rng):
        spec = AnsatzSpec(2, 3, "swap_chain")
        for _ in range(50):
            a, b = random_state(rng, 1), random_state(rng, 1)
            product = np.kron(b, a)  # qubit 0 is the fast index
            out = simulate(build_ansatz(angles(rng, spec.n_params), spec), Statevector(2, product))
            assert reduced_purity_2q(out.amplitudes) == pytest.approx(1.0, abs=1e-10)

    def test_cz_ring_entangles(self, rng):
        spec = AnsatzSpec(2, 2, "cz_ring")
        entangled = 0
        for _ in range(100):
            out = simulate(build_ansatz(angles(rng, spec.n_params), spec))
            entangled += reduced_purity_2q(out.amplitudes) < 1 - 1e-6
        assert entangled >= 90


class TestInvertAndKernelCircuit:
    def test_invert_small(self):
        c = invert(Circuit(1, [G.H(0), G.RZ(0, 0.3)]))
        assert list(c.gates) == [G.RZ(0, -0.3), G.H(0)]

    def test_involution(self, rng):
        c = Circuit(4, random_circuit(rng, 4, 40))
        assert invert(invert(c)) == c

    def test_round_trip_state(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 5))
            c = Circuit(n, random_circuit(rng, n, 30))
            psi = Statevector(n, random_state(rng, n))
            back = simulate(invert(c), simulate(c, psi))
            assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-10

    def test_same_point_is_identity(self, rng):
        spec = FeatureMapSpec(3)
        x = angles(rng, 3)
        s = simulate(build_kernel_circuit(x, x, spec))
        assert s.probabilities[0] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_all_zeros_probability_is_overlap(self, n, rng):
        spec = FeatureMapSpec(n)
        for _ in range(100):
            xi, xj = angles(rng, n), angles(rng, n)
            p0 = simulate(build_kernel_circuit(xi, xj, spec)).probabilities[0]
            a = simulate(build_feature_map(xi, spec))
            b = simulate(build_feature_map(xj, spec))
            assert abs(p0 - abs(inner_product(a, b)) ** 2) <= 1e-10

    def test_kernel_circuit_shape_error(self):
        with pytest.raises(ShapeError):
            build_kernel_circuit([0.1], [0.1, 0.2], FeatureMapSpec(2))

    def test_simulate_width_mismatch(self):
        with pytest.raises(ShapeError):
            simulate(Circuit(2, [G.H(0)]), new_zero_state(3))


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 6),
    layers=st.integers(1, 4),
    kind=st.sampled_from(["cz_ring", "swap_chain"]),
)
def test_ansatz_gate_count(n, layers, kind):
    spec = AnsatzSpec(n, layers, kind)
    c = build_ansatz(np.zeros(spec.n_params), spec)
    ent = len(build_entangler(n, kind))
    assert len(c) == spec.n_params + layers * ent
