import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ancilla_vqe.ansatz import (
    Circuit,
    apply_ansatz,
    brick_wall_pairs,
    build_initial_state,
    build_layered_ansatz,
)
from ancilla_vqe.pauli import DimensionError
from ancilla_vqe.statevector import GateKind, GateSpec, StateVector, ancilla_block, project_ancilla

from conftest import gate_matrix


def kron_ansatz_matrix(circuit: Circuit, theta) -> np.ndarray:
    """Product of full gate matrices over the physical register."""
    n = circuit.n_physical
    U = np.eye(2**n, dtype=complex)
    for g, a in zip(circuit.gates, circuit.angles(theta)):
        U = gate_matrix(g.kind.value, g.qubits, a, n) @ U
    return U


class TestInitialState:
    def test_single_bell_pair(self):
        np.testing.assert_allclose(build_initial_state(1, 1).amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_two_pairs(self):
        amps = build_initial_state(2, 2).amplitudes
        expected = np.zeros(16)
        for a in range(4):
            expected[(a << 2) | a] = 0.5
        np.testing.assert_allclose(amps, expected)

    def test_four_physical_one_ancilla(self):
        amps = build_initial_state(4, 1).amplitudes
        expected = np.zeros(32)
        expected[0b0000_0] = expected[0b1000_1] = 2**-0.5
        np.testing.assert_allclose(amps, expected)

    @pytest.mark.parametrize("np_, na", [(4, 0), (2, 3)])
    def test_out_of_range(self, np_, na):
        with pytest.raises(ValueError):
            build_initial_state(np_, na)

    @pytest.mark.parametrize("np_, na", [(3, 1), (4, 2), (5, 3)])
    def test_matches_purified_sum(self, np_, na):
        M = 2**na
        amps = build_initial_state(np_, na).amplitudes
        expected = np.zeros(2 ** (np_ + na))
        for a in range(M):
            expected[((a << (np_ - na)) << na) | a] = M**-0.5
        np.testing.assert_allclose(amps, expected, atol=1e-15)


class TestLayeredAnsatz:
    def test_two_qubits_one_layer(self):
        c = build_layered_ansatz(2, 1)
        kinds = [g.kind for g in c.gates]
        assert kinds.count(GateKind.RYY) == 1 and kinds.count(GateKind.RZZ) == 1
        assert len(c.gates) == 8 and c.n_params == 8

    def test_paper_size(self):
        assert build_layered_ansatz(8, 6).n_params == 228

    def test_four_qubit_sequence(self):
        c = build_layered_ansatz(4, 1)
        seq = [(g.kind.value, g.qubits) for g in c.gates]
        assert seq[:6] == [
            ("RYY", (0, 1)),
            ("RYY", (2, 3)),
            ("RYY", (1, 2)),
            ("RZZ", (0, 1)),
            ("RZZ", (2, 3)),
            ("RZZ", (1, 2)),
        ]
        singles = seq[6:]
        assert [k for k, _ in singles] == ["RX"] * 4 + ["RZ"] * 4 + ["RX"] * 4
        assert [q for _, q in singles] == [(i,) for i in range(4)] * 3

    @pytest.mark.parametrize("n, L", list(itertools.product(range(2, 11), range(1, 9))))
    def test_param_count_formula(self, n, L):
        c = build_layered_ansatz(n, L)
        assert c.n_params == L * (2 * (n - 1) + 3 * n)
        assert sorted(g.param_index for g in c.gates) == list(range(c.n_params))

    def test_periodic_adds_wrap_bond(self):
        c = build_layered_ansatz(4, 2, bc="periodic")
        assert c.n_params == 2 * (2 * 4 + 3 * 4)
        assert brick_wall_pairs(4, "periodic")[-1] == (3, 0)

    def test_shared_parameters(self):
        c = build_layered_ansatz(4, 3, shared_parameters=True)
        assert c.n_params == 15

    @pytest.mark.parametrize("n, L", [(1, 1), (3, 0)])
    def test_invalid(self, n, L):
        with pytest.raises(ValueError):
            build_layered_ansatz(n, L)


class TestCircuit:
    def test_text_round_trip(self):
        c = build_layered_ansatz(3, 2, n_ancilla=2)
        assert Circuit.from_text(c.to_text()) == c

    def test_golden_text(self):
        text = build_layered_ansatz(2, 1, n_ancilla=1).to_text()
        assert text == (
            "# n_physical=2 n_ancilla=1 n_params=8\n"
            "RYY 0,1 0\nRZZ 0,1 1\nRX 0 2\nRX 1 3\nRZ 0 4\nRZ 1 5\nRX 0 6\nRX 1 7\n"
        )

    def test_rejects_gate_on_ancilla(self):
        with pytest.raises(ValueError):
            Circuit(2, 1, (GateSpec(GateKind.RX, (2,), 0),), 1)

    def test_rejects_unused_parameter(self):
        with pytest.raises(ValueError):
            Circuit(2, 0, (GateSpec(GateKind.RX, (0,), 0),), 2)

    def test_angles_length_check(self):
        with pytest.raises(DimensionError):
            build_layered_ansatz(2, 1).angles(np.zeros(3))


class TestApplyAnsatz:
    def test_zero_theta_identity(self):
        c = build_layered_ansatz(4, 2, n_ancilla=2)
        s = build_initial_state(4, 2)
        np.testing.assert_allclose(apply_ansatz(s, c, np.zeros(c.n_params)).amplitudes, s.amplitudes, atol=1e-15)

    def test_parameter_mismatch(self):
        c = build_layered_ansatz(3, 1, n_ancilla=1)
        with pytest.raises(DimensionError):
            apply_ansatz(build_initial_state(3, 1), c, np.zeros(c.n_params + 1))

    def test_state_size_mismatch(self):
        c = build_layered_ansatz(3, 1, n_ancilla=1)
        with pytest.raises(DimensionError):
            apply_ansatz(build_initial_state(3, 2), c, np.zeros(c.n_params))

    @given(st.integers(0, 2**32 - 1))
    def test_matches_kron_oracle(self, seed):
        rng = np.random.default_rng(seed)
        c = build_layered_ansatz(3, 2, n_ancilla=2)
        theta = rng.uniform(-np.pi, np.pi, c.n_params)
        init = build_initial_state(3, 2)
        U = np.kron(kron_ansatz_matrix(c, theta), np.eye(4))
        np.testing.assert_allclose(apply_ansatz(init, c, theta).amplitudes, U @ init.amplitudes, atol=1e-12)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([(3, 1), (4, 2), (5, 3)]))
    def test_norm_orthogonality_and_reduced_ancilla(self, seed, sizes):
        np_, na = sizes
        rng = np.random.default_rng(seed)
        c = build_layered_ansatz(np_, 2, n_ancilla=na)
        out = apply_ansatz(build_initial_state(np_, na), c, rng.uniform(-np.pi, np.pi, c.n_params))
        assert abs(out.norm - 1) < 1e-10
        M = 2**na
        # reduced ancilla density matrix stays maximally mixed
        B = ancilla_block(out, np_)
        np.testing.assert_allclose(B.T @ B.conj(), np.eye(M) / M, atol=1e-10)
        # projected and renormalized trial states are orthonormal
        cols = np.array([project_ancilla(out, np_, a)[0].amplitudes for a in range(M)]).T
        np.testing.assert_allclose(cols.conj().T @ cols, np.eye(M), atol=1e-10)

    def test_norm_drift_detected(self):
        c = build_layered_ansatz(2, 1, n_ancilla=1)
        bad = StateVector(3, np.full(8, 0.5), check_norm=False)
        with pytest.raises(RuntimeError, match="norm drift"):
            apply_ansatz(bad, c, np.zeros(c.n_params))
