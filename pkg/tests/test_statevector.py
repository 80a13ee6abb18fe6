import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ancilla_vqe.ansatz import build_initial_state
from ancilla_vqe.pauli import DimensionError, PauliSum, build_tfim, tensor_with_ancilla, PauliString
from ancilla_vqe.statevector import (
    ConsistencyError,
    GateKind,
    GateSpec,
    StateVector,
    apply_gate,
    apply_pauli_rotation_generator,
    expectation,
    expectation_with_ancilla_projector,
    init_basis_state,
    inner,
    project_ancilla,
    sample_bitstrings,
)

from conftest import diagonal_ising_energy, gate_matrix, kron_label, random_state

ROTATIONS = [GateKind.RX, GateKind.RZ, GateKind.RYY, GateKind.RZZ]
ALL_KINDS = ROTATIONS + [GateKind.HADAMARD, GateKind.CNOT]
H = GateSpec(GateKind.HADAMARD, (0,))


def spec_for(kind, qubits):
    return GateSpec(kind, qubits, 0 if kind.parameterized else None)


@st.composite
def gate_cases(draw, max_qubits=4):
    n = draw(st.integers(2, max_qubits))
    kind = draw(st.sampled_from(ALL_KINDS))
    qubits = tuple(draw(st.permutations(range(n)))[: kind.arity])
    angle = draw(st.floats(-7, 7, allow_nan=False)) if kind.parameterized else None
    seed = draw(st.integers(0, 2**32 - 1))
    return n, kind, qubits, angle, seed


def bell() -> StateVector:
    return StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))


class TestInitBasisState:
    def test_single(self):
        np.testing.assert_array_equal(init_basis_state(1, "0").amplitudes, [1, 0])

    def test_msb_convention(self):
        np.testing.assert_array_equal(init_basis_state(2, "10").amplitudes, [0, 0, 1, 0])

    def test_all_ones(self):
        assert init_basis_state(3, "111").amplitudes[7] == 1

    @pytest.mark.parametrize("bits", ["0", "012", "1000"])
    def test_length_mismatch(self, bits):
        with pytest.raises(DimensionError):
            init_basis_state(3, bits)


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ConsistencyError):
            StateVector(1, [1, 1])

    def test_rejects_wrong_length(self):
        with pytest.raises(DimensionError):
            StateVector(2, [1, 0])

    def test_probabilities(self):
        np.testing.assert_allclose(bell().probabilities(), [0.5, 0, 0, 0.5])


class TestGateSpec:
    def test_missing_param_index(self):
        with pytest.raises(ValueError):
            GateSpec(GateKind.RX, (0,))

    def test_fixed_gate_with_param(self):
        with pytest.raises(ValueError):
            GateSpec(GateKind.CNOT, (0, 1), 3)

    def test_repeated_qubit(self):
        with pytest.raises(ValueError):
            GateSpec(GateKind.RZZ, (1, 1), 0)

    def test_wrong_arity(self):
        with pytest.raises(ValueError):
            GateSpec(GateKind.RX, (0, 1), 0)


class TestApplyGate:
    def test_rx_zero_identity(self, rng):
        s = StateVector(3, random_state(rng, 3))
        out = apply_gate(s, GateSpec(GateKind.RX, (1,), 0), 0.0)
        np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-15)

    def test_hadamard_on_zero(self):
        out = apply_gate(init_basis_state(1, "0"), H)
        np.testing.assert_allclose(out.amplitudes, [2**-0.5, 2**-0.5])

    def test_rzz_phase_on_aligned(self):
        th = 0.83
        out = apply_gate(init_basis_state(2, "00"), GateSpec(GateKind.RZZ, (0, 1), 0), th)
        np.testing.assert_allclose(out.amplitudes, [np.exp(-0.5j * th), 0, 0, 0])

    def test_missing_angle(self):
        with pytest.raises(TypeError):
            apply_gate(init_basis_state(1, "0"), GateSpec(GateKind.RX, (0,), 0))

    def test_extra_angle(self):
        with pytest.raises(TypeError):
            apply_gate(init_basis_state(1, "0"), H, 0.3)

    def test_qubit_out_of_range(self):
        with pytest.raises(DimensionError):
            apply_gate(init_basis_state(1, "0"), GateSpec(GateKind.CNOT, (0, 1)))

    def test_input_not_mutated(self):
        s = init_basis_state(1, "0")
        apply_gate(s, H)
        np.testing.assert_array_equal(s.amplitudes, [1, 0])

    @given(gate_cases())
    def test_matches_kron_matrix(self, case):
        n, kind, qubits, angle, seed = case
        v = random_state(np.random.default_rng(seed), n)
        out = apply_gate(StateVector(n, v), spec_for(kind, qubits), angle)
        np.testing.assert_allclose(out.amplitudes, gate_matrix(kind.value, qubits, angle, n) @ v, atol=1e-12)

    @given(gate_cases())
    def test_inverse_restores(self, case):
        n, kind, qubits, angle, seed = case
        s = StateVector(n, random_state(np.random.default_rng(seed), n))
        g = spec_for(kind, qubits)
        back = apply_gate(apply_gate(s, g, angle), g, None if angle is None else -angle)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)

    def test_norm_preserved_over_many_random_cases(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            kind = ALL_KINDS[int(rng.integers(len(ALL_KINDS)))]
            qubits = tuple(rng.permutation(n)[: kind.arity])
            angle = float(rng.uniform(-10, 10)) if kind.parameterized else None
            out = apply_gate(StateVector(n, random_state(rng, n)), spec_for(kind, qubits), angle)
            assert abs(out.norm - 1) < 1e-12

    def test_batched_columns_independent(self, rng):
        from ancilla_vqe.statevector import apply_gate_array

        block = np.stack([random_state(rng, 3) for _ in range(4)], axis=1)
        ref = [gate_matrix("RYY", (2, 0), 0.4, 3) @ block[:, j] for j in range(4)]
        apply_gate_array(block, 3, GateKind.RYY, (2, 0), 0.4)
        np.testing.assert_allclose(block, np.array(ref).T, atol=1e-12)

    @pytest.mark.parametrize("kind", ROTATIONS)
    def test_generator(self, kind, rng):
        n = 3
        g = spec_for(kind, (2, 0)[: kind.arity])
        label = ["I"] * n
        for q in g.qubits:
            label[q] = g.generator[0]
        v = random_state(rng, n)
        np.testing.assert_allclose(apply_pauli_rotation_generator(v, n, g), kron_label("".join(label)) @ v, atol=1e-14)


class TestExpectation:
    def test_z_on_zero(self):
        assert expectation(init_basis_state(1, "0"), PauliSum(1, [(1.0, "Z")])) == 1.0

    def test_x_on_plus(self):
        plus = apply_gate(init_basis_state(1, "0"), H)
        assert expectation(plus, PauliSum(1, [(1.0, "X")])) == pytest.approx(1.0)

    def test_zz_on_bell(self):
        assert expectation(bell(), PauliSum(2, [(1.0, "ZZ")])) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            expectation(bell(), PauliSum(1, [(1.0, "Z")]))


class TestInner:
    def test_same(self):
        assert inner(init_basis_state(1, "0"), init_basis_state(1, "0")) == 1

    def test_orthogonal(self):
        assert inner(init_basis_state(1, "0"), init_basis_state(1, "1")) == 0

    def test_plus(self):
        plus = apply_gate(init_basis_state(1, "0"), H)
        assert inner(init_basis_state(1, "0"), plus) == pytest.approx(2**-0.5)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            inner(bell(), init_basis_state(1, "0"))


class TestAncillaProjector:
    def test_purified_diagonal_alpha0(self):
        n, na = 6, 2
        Hd = PauliSum(n, [t for t in build_tfim(n).terms if "X" not in str(t.string)])
        val = expectation_with_ancilla_projector(build_initial_state(n, na), Hd, 0)
        assert val == pytest.approx(diagonal_ising_energy("0" * n) / 4)

    def test_purified_each_alpha_matches_bond_count(self):
        n, na = 5, 2
        state = build_initial_state(n, na)
        for alpha in range(4):
            bits = format(alpha, "02b") + "0" * (n - na)
            val = 4 * expectation_with_ancilla_projector(state, build_tfim(n), alpha)
            assert val == pytest.approx(diagonal_ising_energy(bits))

    def test_identity_completeness(self, rng):
        s = StateVector(4, random_state(rng, 4))
        I2 = PauliSum(2, [(1.0, "II")])
        assert sum(expectation_with_ancilla_projector(s, I2, a) for a in range(4)) == pytest.approx(1.0)

    def test_orthogonal_ancilla(self):
        s = init_basis_state(3, "101")  # physical "10", ancilla "1"
        assert expectation_with_ancilla_projector(s, build_tfim(2), 0) == 0.0

    def test_alpha_out_of_range(self):
        with pytest.raises(IndexError):
            expectation_with_ancilla_projector(bell(), PauliSum(1, [(1.0, "Z")]), 2)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 2))
    def test_sum_equals_full_expectation(self, seed, na):
        rng = np.random.default_rng(seed)
        n = 3
        s = StateVector(n + na, random_state(rng, n + na))
        Hs = build_tfim(n, J=rng.normal(), h_x=rng.normal())
        total = sum(expectation_with_ancilla_projector(s, Hs, a) for a in range(2**na))
        assert total == pytest.approx(expectation(s, tensor_with_ancilla(Hs, PauliString.identity(na))), abs=1e-12)

    def test_project_ancilla_norm(self):
        st_, norm = project_ancilla(build_initial_state(3, 2), 3, 2)
        assert norm == pytest.approx(0.5)
        assert st_.amplitudes[0b100] == pytest.approx(1.0)


class TestSampling:
    def test_deterministic_basis(self):
        assert sample_bitstrings(init_basis_state(1, "0"), 100, 1) == {"0": 100}

    def test_born_rule(self):
        plus = apply_gate(init_basis_state(1, "0"), H)
        shots = 200_000
        counts = sample_bitstrings(plus, shots, 3)
        sigma = np.sqrt(shots * 0.25)
        assert abs(counts["0"] - shots / 2) < 5 * sigma

    def test_bell_outcomes(self):
        counts = sample_bitstrings(bell(), 5000, 11)
        assert set(counts) <= {"00", "11"}
        assert sum(counts.values()) == 5000

    def test_seeded(self, rng):
        s = StateVector(3, random_state(rng, 3))
        assert sample_bitstrings(s, 1000, 5) == sample_bitstrings(s, 1000, 5)

    def test_shots_positive(self):
        with pytest.raises(ValueError):
            sample_bitstrings(bell(), 0, 1)
