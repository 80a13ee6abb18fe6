"""Shared oracles and fixtures.

The helpers here are deliberately built from first principles (Kronecker
products, matrix exponentials, explicit projections) so that they share no
code path with the package under test.
"""

from __future__ import annotations

import functools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    """Matrix of a Pauli label, qubit 0 as the leftmost Kronecker factor."""
    return functools.reduce(np.kron, [PAULI[c] for c in label], np.eye(1, dtype=complex))


def kron_sum(n: int, terms) -> np.ndarray:
    """Dense matrix of sum coeff * label."""
    out = np.zeros((2**n, 2**n), dtype=complex)
    for c, label in terms:
        out += c * kron_label(label)
    return out


def tfim_terms(n: int, J=1.0, h_x=0.5, bc="open"):
    bonds = [(i, i + 1) for i in range(n - 1)] + ([(n - 1, 0)] if bc == "periodic" else [])
    terms = []
    for i, j in bonds:
        lab = ["I"] * n
        lab[i] = lab[j] = "Z"
        terms.append((-J / 4, "".join(lab)))
    for i in range(n):
        lab = ["I"] * n
        lab[i] = "X"
        terms.append((h_x / 2, "".join(lab)))
    return terms


def gate_matrix(kind: str, qubits, angle, n: int) -> np.ndarray:
    """Full 2**n matrix of a gate via expm or the textbook fixed gates."""
    if kind in ("RX", "RZ"):
        lab = ["I"] * n
        lab[qubits[0]] = kind[1]
        return scipy.linalg.expm(-0.5j * angle * kron_label("".join(lab)))
    if kind in ("RYY", "RZZ"):
        lab = ["I"] * n
        lab[qubits[0]] = lab[qubits[1]] = kind[1]
        return scipy.linalg.expm(-0.5j * angle * kron_label("".join(lab)))
    if kind == "H":
        lab = ["I"] * n
        lab[qubits[0]] = "X"
        x = kron_label("".join(lab))
        lab[qubits[0]] = "Z"
        z = kron_label("".join(lab))
        return (x + z) / np.sqrt(2)
    if kind == "CNOT":
        c, t = qubits
        dim = 2**n
        U = np.zeros((dim, dim))
        for i in range(dim):
            j = i ^ (1 << (n - 1 - t)) if i >> (n - 1 - c) & 1 else i
            U[j, i] = 1
        return U.astype(complex)
    raise ValueError(kind)


def random_state(rng, n: int) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def diagonal_ising_energy(bits: str, J=1.0) -> float:
    """-J/4 sum z_i z_{i+1} for an open chain, z = +1 for '0'."""
    z = [1 if b == "0" else -1 for b in bits]
    return -J / 4 * sum(z[i] * z[i + 1] for i in range(len(z) - 1))


def shift_invert_lowest(A: np.ndarray, k: int, tol=1e-12, max_iter=2000) -> np.ndarray:
    """Lowest k eigenvalues by block inverse iteration below the spectrum.

    Independent of the Jacobi solver: (A - sigma)^-1 is applied through an LU
    factorization, the block is re-orthonormalized by QR and a Rayleigh-Ritz
    step (LAPACK on the small block) extracts the eigenvalues.  Stops once
    every wanted Ritz pair has residual below ``tol``.
    """
    n = A.shape[0]
    sigma = -np.abs(A).sum(axis=1).max() - 1.0  # below the Gershgorin bound
    lu = scipy.linalg.lu_factor(A - sigma * np.eye(n))
    b = min(n, k + 4)
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.normal(size=(n, b)) + 1j * rng.normal(size=(n, b)))
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(scipy.linalg.lu_solve(lu, Q))
        w, y = np.linalg.eigh(Q.conj().T @ A @ Q)
        X = Q @ y
        res = np.linalg.norm(A @ X[:, :k] - X[:, :k] * w[:k], axis=0)
        if res.max() < tol:
            return w[:k]
        Q = X
    raise RuntimeError("inverse iteration did not converge")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
