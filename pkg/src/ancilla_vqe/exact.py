"""Exact-diagonalization oracle and the overlap-rank diagnostic."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pauli import PauliSum, SizeLimitError, dense_matrix

EXACT_LIMIT = 12


class NotHermitianError(ValueError):
    pass


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pair schedule covering every (p, q) once per sweep in n-1 rounds of disjoint pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p, q = np.array(pairs).T
            rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(
    A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100, herm_tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a complex Hermitian matrix by cyclic Jacobi rotations.

    Each round annihilates a set of disjoint off-diagonal pairs at once
    (tournament ordering), so a sweep costs n-1 vectorized rounds.  Iterates
    until the off-diagonal Frobenius norm drops below ``tol`` (scaled by the
    matrix norm when that exceeds one).

    Returns ascending eigenvalues and the unitary whose columns are the
    eigenvectors.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.ndim != 2 or A.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > herm_tol * scale:
        raise NotHermitianError("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    if not np.any(A.imag):
        # real symmetric input: stay in real arithmetic, phases reduce to signs
        A = A.real.copy()
    Vh = np.eye(n, dtype=A.dtype)  # adjoint of the accumulated rotation
    rounds = _round_robin(n)
    target = tol * scale

    def off_norm():
        off = A.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    sweeps = 0
    while off_norm() > target:
        if sweeps == max_sweeps:
            raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p, q in rounds:
            b = A[p, q]
            r = np.abs(b)
            live = r > 1e-300
            if not live.any():
                continue
            p, q, b, r = p[live], q[live], b[live], r[live]
            a = A[p, p].real
            d = A[q, q].real
            # G = [[c, s e^{i phi}], [-s e^{-i phi}, c]] zeroes A[p, q] = r e^{i phi}
            theta = 0.5 * np.arctan2(2 * r, d - a)
            c = np.cos(theta)[:, None]
            s = np.sin(theta)[:, None]
            ph = (b / r)[:, None]
            # A <- G^H A G as two row passes: rows(G^H A), then rows of its adjoint
            A = _rotate_rows(A, p, q, c, s, ph)
            A = _rotate_rows(np.ascontiguousarray(A.conj().T), p, q, c, s, ph)
            A[q, p] = 0.0
            A[p, q] = 0.0
            Vh = _rotate_rows(Vh, p, q, c, s, ph)

    w = np.diag(A).real
    order = np.argsort(w, kind="stable")
    return w[order], Vh.conj().T[:, order].astype(complex)


def _rotate_rows(X, p, q, c, s, ph):
    # rows p, q of X <- G^H applied to them
    xp = X[p]
    xq = X[q]
    X[p] = c * xp - s * ph * xq
    X[q] = s * ph.conj() * xp + c * xq
    return X


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def lowest(self, k: int) -> "Spectrum":
        return Spectrum(self.eigenvalues[:k], self.eigenvectors[:, :k])


def exact_eigenpairs(H: PauliSum, k: int | None = None, limit: int = EXACT_LIMIT) -> Spectrum:
    """Lowest ``k`` eigenpairs of ``H`` by dense Jacobi diagonalization."""
    if H.n_qubits > limit:
        raise SizeLimitError(f"{H.n_qubits} qubits exceeds exact-diagonalization limit {limit}")
    dim = 1 << H.n_qubits
    k = dim if k is None else k
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} outside [1, {dim}]")
    w, v = jacobi_eigh(dense_matrix(H, limit=limit))
    return Spectrum(w[:k], v[:, :k])


def initial_basis_indices(n_physical: int, n_ancilla: int) -> np.ndarray:
    """Indices of the physical basis states |alpha, p>: the first n_ancilla qubits spell alpha."""
    return np.arange(1 << n_ancilla, dtype=np.int64) << (n_physical - n_ancilla)


def overlap_matrix(spectrum: Spectrum, n_ancilla: int) -> np.ndarray:
    """``M[i, alpha] = <E_i | alpha, p>`` for the listed eigenvectors."""
    n_physical = int(np.log2(spectrum.eigenvectors.shape[0]))
    idx = initial_basis_indices(n_physical, n_ancilla)
    return spectrum.eigenvectors[idx, :].conj().T


def overlap_rank(spectrum: Spectrum, n_ancilla: int, tol: float = 1e-8) -> int:
    """Numerical rank of the eigenstate / initial-basis overlap matrix.

    Singular values above ``tol`` times the largest one count.
    """
    if len(spectrum) > 1 << n_ancilla:
        raise ValueError(f"{len(spectrum)} eigenstates but only {1 << n_ancilla} basis states")
    s = np.linalg.svd(overlap_matrix(spectrum, n_ancilla), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def write_spectrum_csv(path, eigenvalues) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue"])
        for i, e in enumerate(eigenvalues):
            w.writerow([i, repr(float(e))])


def read_spectrum_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["eigenvalue"]) for r in rows])
