"""Ancilla-side measurement of the subspace Hamiltonian, its eigenpairs and thermal averages.

Every matrix element ``<beta-bar|H|alpha-bar>`` between trial states is
recovered from expectation values of ``H (x) A_mu`` on the final purified
state, where ``A_mu`` runs over the ``4**n_ancilla`` Pauli strings of the
ancilla register.  Pauli strings are enumerated with ancilla 0 as the most
significant base-4 digit, digits ordered I, X, Y, Z.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .exact import jacobi_eigh
from .pauli import DimensionError, PauliAxis, PauliString, PauliSum, tensor_with_ancilla
from .statevector import ConsistencyError, StateVector, expectation, project_ancilla

HERMITIAN_TOL = 1e-10
MAX_SUBSPACE_DIM = 16
MODES = ("k-block", "full")
_AXES = (PauliAxis.I, PauliAxis.X, PauliAxis.Y, PauliAxis.Z)


def v_matrix() -> np.ndarray:
    """Coefficients expressing |beta><alpha| on one qubit in the basis I, X, Y, Z.

    Rows are (beta, alpha) in the order 00, 01, 10, 11.
    """
    return 0.5 * np.array(
        [[1, 0, 0, 1], [0, 1, 1j, 0], [0, 1, -1j, 0], [1, 0, 0, -1]],
        dtype=complex,
    )


def v_tensor(n_ancilla: int) -> np.ndarray:
    """``V[beta, alpha, mu] = prod_i v[(beta_i, alpha_i), mu_i]`` with shape (M, M, 4**n_ancilla)."""
    if n_ancilla < 1:
        raise ValueError("need at least one ancilla")
    v1 = v_matrix().reshape(2, 2, 4)
    V = v1
    for _ in range(n_ancilla - 1):
        M = V.shape[0]
        V = np.einsum("abm,cdn->acbdmn", V, v1).reshape(2 * M, 2 * M, -1)
    return V


def ancilla_strings(n_ancilla: int) -> list[PauliString]:
    """All ``4**n_ancilla`` Pauli strings in the order used by ``v_tensor``."""
    return [PauliString(axes) for axes in itertools.product(_AXES, repeat=n_ancilla)]


def measure_h_mu(psi: StateVector, H: PauliSum, mu: PauliString) -> float:
    """``<psi| H (x) A_mu |psi>`` with ``mu`` acting on the trailing ancilla qubits."""
    if H.n_qubits + len(mu) != psi.n_qubits:
        raise DimensionError(
            f"H on {H.n_qubits} and mu on {len(mu)} qubits do not cover a {psi.n_qubits}-qubit state"
        )
    return expectation(psi, tensor_with_ancilla(H, mu))


def _check_mode(mode: str, K: int | None, M: int) -> int:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "full":
        return M
    if K is None or not 1 <= K <= M:
        raise ValueError(f"k-block mode needs 1 <= K <= {M}, got K={K}")
    return K


def assemble_subspace_matrix(
    psi: StateVector, H: PauliSum, n_ancilla: int, mode: str = "k-block", K: int | None = None
) -> np.ndarray:
    """``H_{beta alpha} = M sum_mu V[beta, alpha, mu] h_mu``.

    All ``4**n_ancilla`` expectation values are taken once from ``psi``;
    the k-block mode keeps rows and columns below ``K``.
    """
    M = 1 << n_ancilla
    dim = _check_mode(mode, K, M)
    if psi.n_qubits != H.n_qubits + n_ancilla:
        raise DimensionError(f"state has {psi.n_qubits} qubits, expected {H.n_qubits + n_ancilla}")
    h = np.array([measure_h_mu(psi, H, mu) for mu in ancilla_strings(n_ancilla)])
    V = v_tensor(n_ancilla)[:dim, :dim]
    mat = M * (V @ h)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL * scale:
        raise ConsistencyError("assembled subspace matrix is not Hermitian")
    return mat


def eigenpairs_from_subspace(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and the unitary S whose columns diagonalize ``matrix``."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] > MAX_SUBSPACE_DIM:
        raise ValueError(f"subspace dimension {matrix.shape[0]} exceeds {MAX_SUBSPACE_DIM}")
    return jacobi_eigh(matrix, herm_tol=HERMITIAN_TOL)


def trial_state(psi: StateVector, n_physical: int, alpha: int) -> StateVector:
    """``|alpha-bar, p>``: the physical state paired with ancilla outcome alpha."""
    return project_ancilla(psi, n_physical, alpha)[0]


def reconstruct_eigenstate(psi: StateVector, S, i: int, n_physical: int) -> StateVector:
    """``sum_alpha S[alpha, i] |alpha-bar, p>``, normalized."""
    S = np.asarray(S)
    if not 0 <= i < S.shape[1]:
        raise IndexError(f"eigenvector index {i} out of range [0, {S.shape[1]})")
    amps = np.zeros(1 << n_physical, dtype=complex)
    for alpha in range(S.shape[0]):
        amps += S[alpha, i] * trial_state(psi, n_physical, alpha).amplitudes
    return StateVector(n_physical, amps / np.linalg.norm(amps))


def boltzmann_weights(E, beta: float) -> np.ndarray:
    """Normalized ``exp(-beta E_i) / Z``, shifted by min(E) for stability."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    E = np.asarray(E, dtype=float)
    w = np.exp(-beta * (E - E.min()))
    return w / w.sum()


def thermal_operator(E, S, beta: float, n_ancilla: int) -> np.ndarray:
    """Ancilla operator T (M x M) whose expectation with O reproduces the thermal average.

    For the purified state, ``M <psi|O (x) T|psi> = Tr(O_sub T^T)`` where
    ``O_sub`` is O in the trial basis, so the ancilla vectors carry the
    complex conjugate of S.  For real S this is just ``sum S[:, i]|alpha>``.
    """
    S = np.asarray(S, dtype=complex)
    M = 1 << n_ancilla
    w = boltzmann_weights(E, beta)
    vecs = np.zeros((M, S.shape[1]), dtype=complex)
    vecs[: S.shape[0]] = S.conj()
    return (vecs * w) @ vecs.conj().T


def thermal_expectation(psi: StateVector, O: PauliSum, E, S, beta: float) -> float:
    """``M <psi| O (x) T |psi>``, measured through the Pauli decomposition of T."""
    n_ancilla = psi.n_qubits - O.n_qubits
    if n_ancilla < 1:
        raise DimensionError("state carries no ancilla register")
    T = thermal_operator(E, S, beta, n_ancilla)
    M = 1 << n_ancilla
    V = v_tensor(n_ancilla)
    # T = sum_{b,a} T[b,a] |b><a| = sum_mu t_mu A_mu
    t = np.einsum("ba,bam->m", T, V)
    if np.max(np.abs(t.imag), initial=0.0) > HERMITIAN_TOL:
        raise ConsistencyError("thermal operator is not Hermitian")
    total = 0.0
    for coeff, mu in zip(t.real, ancilla_strings(n_ancilla)):
        if coeff != 0.0:
            total += coeff * measure_h_mu(psi, O, mu)
    return M * total


def classical_thermal_average(psi: StateVector, O: PauliSum, E, S, beta: float) -> float:
    """``sum_i w_i <E_i|O|E_i>`` over the reconstructed eigenstates."""
    w = boltzmann_weights(E, beta)
    vals = [expectation(reconstruct_eigenstate(psi, S, i, O.n_qubits), O) for i in range(len(w))]
    return float(np.dot(w, vals))


@dataclass
class SubspaceResult:
    mode: str
    matrix: np.ndarray
    eigenvalues: np.ndarray
    S: np.ndarray
    errors: np.ndarray | None = field(default=None)

    @classmethod
    def from_state(
        cls, psi: StateVector, H: PauliSum, n_ancilla: int, mode: str = "k-block", K: int | None = None
    ) -> "SubspaceResult":
        mat = assemble_subspace_matrix(psi, H, n_ancilla, mode, K)
        E, S = eigenpairs_from_subspace(mat)
        return cls(mode, mat, E, S)

    def with_reference(self, exact_eigenvalues) -> "SubspaceResult":
        """Attach ``E_i - E_i^ex`` for every eigenvalue that has a reference."""
        ref = np.asarray(exact_eigenvalues, dtype=float)
        n = min(len(ref), len(self.eigenvalues))
        return SubspaceResult(self.mode, self.matrix, self.eigenvalues, self.S, self.eigenvalues[:n] - ref[:n])

    def to_dict(self) -> dict:
        def pairs(a):
            return [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()]

        return {
            "mode": self.mode,
            "dim": int(self.matrix.shape[0]),
            "matrix": pairs(self.matrix),
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "S": pairs(self.S),
            "errors": None if self.errors is None else [float(e) for e in self.errors],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubspaceResult":
        n = d["dim"]

        def unpack(flat):
            return np.array([complex(re, im) for re, im in flat]).reshape(n, n)

        errs = None if d.get("errors") is None else np.array(d["errors"])
        return cls(d["mode"], unpack(d["matrix"]), np.array(d["eigenvalues"]), unpack(d["S"]), errs)

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def read_json(cls, path) -> "SubspaceResult":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
