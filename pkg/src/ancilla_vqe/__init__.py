"""Statevector simulator and ancilla-purified variational eigensolver for several low-lying states."""

from .ansatz import Circuit, apply_ansatz, build_initial_state, build_layered_ansatz
from .exact import Spectrum, exact_eigenpairs, jacobi_eigh, overlap_rank
from .pauli import PauliAxis, PauliString, PauliSum, PauliTerm, build_tfim, dense_matrix, tensor_with_ancilla
from .statevector import GateKind, GateSpec, StateVector, apply_gate, expectation, init_basis_state, inner
from .subspace import (
    SubspaceResult,
    assemble_subspace_matrix,
    eigenpairs_from_subspace,
    measure_h_mu,
    reconstruct_eigenstate,
    thermal_expectation,
    v_matrix,
)
from .vqe import OptimizerConfig, TrainTrace, grad_adjoint, grad_parameter_shift, loss, optimize

__version__ = "0.1.0"
