"""Pauli-string algebra and the transverse-field Ising Hamiltonian.

Qubit ordering used throughout the package: qubit 0 is the most significant
bit of a basis-state index.  For an operator over ``n`` qubits, qubit ``q``
therefore lives at bit position ``n - 1 - q``.  Physical qubits come first,
ancillas after them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

DENSE_LIMIT = 14


class DimensionError(ValueError):
    """Operand sizes do not agree."""


class SizeLimitError(ValueError):
    """Requested dense object is larger than the configured limit."""


class PauliAxis(enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"


_SINGLE = {
    PauliAxis.I: np.eye(2, dtype=complex),
    PauliAxis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliAxis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliAxis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_matrix(axis: PauliAxis | str) -> np.ndarray:
    """2x2 matrix of a single-qubit Pauli operator."""
    return _SINGLE[PauliAxis(axis)].copy()


@dataclass(frozen=True)
class PauliString:
    axes: tuple[PauliAxis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(PauliAxis(a) for a in self.axes))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """``"ZZI"`` -> Z on qubit 0, Z on qubit 1, identity on qubit 2."""
        return cls(tuple(PauliAxis(c) for c in label.upper()))

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls((PauliAxis.I,) * n_qubits)

    @classmethod
    def from_sparse(cls, n_qubits: int, ops: Mapping[int, str | PauliAxis]) -> "PauliString":
        """Build a string from ``{qubit: axis}``; unlisted qubits get identity."""
        axes = [PauliAxis.I] * n_qubits
        for q, a in ops.items():
            if not 0 <= q < n_qubits:
                raise DimensionError(f"qubit {q} out of range for {n_qubits} qubits")
            axes[q] = PauliAxis(a)
        return cls(tuple(axes))

    def __len__(self) -> int:
        return len(self.axes)

    def __str__(self) -> str:
        return "".join(a.value for a in self.axes)

    def __add__(self, other: "PauliString") -> "PauliString":
        # concatenation: self on the leading qubits, other on the trailing ones
        return PauliString(self.axes + other.axes)

    @property
    def is_identity(self) -> bool:
        return all(a is PauliAxis.I for a in self.axes)

    @cached_property
    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, n_y) in the package bit convention."""
        n = len(self.axes)
        x_mask = z_mask = n_y = 0
        for q, a in enumerate(self.axes):
            bit = 1 << (n - 1 - q)
            if a in (PauliAxis.X, PauliAxis.Y):
                x_mask |= bit
            if a in (PauliAxis.Z, PauliAxis.Y):
                z_mask |= bit
            n_y += a is PauliAxis.Y
        return x_mask, z_mask, n_y


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        c = float(self.coefficient)
        if not np.isfinite(c):
            raise ValueError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "coefficient", c)


class PauliSum:
    """Real-weighted sum of Pauli strings over a fixed number of qubits.

    Terms with the same string are merged on construction and zero
    coefficients are dropped, so the stored terms are unique and nonzero.
    Instances are immutable.
    """

    __slots__ = ("_n_qubits", "_terms", "_action")

    def __init__(self, n_qubits: int, terms: Iterable[PauliTerm | tuple[float, PauliString | str]] = ()):
        if n_qubits < 1:
            raise DimensionError("a PauliSum needs at least one qubit")
        merged: dict[PauliString, float] = {}
        for t in terms:
            if not isinstance(t, PauliTerm):
                coeff, s = t
                if isinstance(s, str):
                    s = PauliString.from_label(s)
                t = PauliTerm(coeff, s)
            if len(t.string) != n_qubits:
                raise DimensionError(
                    f"string {t.string} has length {len(t.string)}, expected {n_qubits}"
                )
            merged[t.string] = merged.get(t.string, 0.0) + t.coefficient
        self._n_qubits = n_qubits
        self._terms = tuple(PauliTerm(c, s) for s, c in merged.items() if c != 0.0)
        self._action = None

    @property
    def n_qubits(self) -> int:
        return self._n_qubits

    @property
    def terms(self) -> tuple[PauliTerm, ...]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coefficient:g}*{t.string}" for t in self._terms) or "0"
        return f"PauliSum({self._n_qubits}, {body})"

    def as_dict(self) -> dict[str, float]:
        return {str(t.string): t.coefficient for t in self._terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._n_qubits == other._n_qubits and self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash((self._n_qubits, frozenset(self.as_dict().items())))

    def with_term(self, coefficient: float, string: PauliString | str) -> "PauliSum":
        """Return a new sum with one more term merged in."""
        return PauliSum(self._n_qubits, self._terms + ((coefficient, string),))

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self._n_qubits:
            raise DimensionError("cannot add PauliSums over different qubit counts")
        return PauliSum(self._n_qubits, self._terms + other._terms)

    def scaled(self, factor: float) -> "PauliSum":
        return PauliSum(self._n_qubits, [(factor * t.coefficient, t.string) for t in self._terms])

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """Return ``P @ amps`` without forming the matrix.

        ``amps`` has length ``2**n_qubits`` along axis 0; any trailing axes
        are treated as a batch.
        """
        if amps.shape[0] != 1 << self._n_qubits:
            raise DimensionError(
                f"operand has {amps.shape[0]} rows, operator acts on {1 << self._n_qubits}"
            )
        out = np.zeros(amps.shape, dtype=complex)
        for coeff, src, sign in self._compiled():
            if amps.ndim > 1:
                sign = sign.reshape((-1,) + (1,) * (amps.ndim - 1))
            out += sign * amps[src]
        return out

    def _compiled(self):
        # (coeff, source index, coeff*phase) per term; (P v)[c] = phase[c] * v[c ^ x]
        if self._action is None:
            idx = np.arange(1 << self._n_qubits, dtype=np.int64)
            action = []
            for t in self._terms:
                x_mask, z_mask, n_y = t.string.masks
                src = idx ^ x_mask
                parity = (np.bitwise_count(src & z_mask) & 1).astype(np.int64)
                phase = (1j ** n_y) * (1 - 2 * parity)
                action.append((t.coefficient, src, t.coefficient * phase))
            self._action = action
        return self._action


def build_tfim(n: int, J: float = 1.0, h_x: float = 0.5, bc: str = "open") -> PauliSum:
    """Transverse-field Ising chain ``-J sum S^z S^z + h_x sum S^x`` with S = sigma/2.

    Open chains have ``n-1`` bonds and periodic chains ``n`` bonds.
    """
    if n < 2:
        raise ValueError(f"invalid chain size n={n}; need n >= 2")
    if bc not in ("open", "periodic"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    if bc == "periodic" and n < 3:
        # bond (1, 0) would duplicate bond (0, 1)
        raise ValueError("periodic chains need n >= 3")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if bc == "periodic":
        bonds.append((n - 1, 0))
    terms = [(-J / 4, PauliString.from_sparse(n, {i: "Z", j: "Z"})) for i, j in bonds]
    terms += [(h_x / 2, PauliString.from_sparse(n, {i: "X"})) for i in range(n)]
    return PauliSum(n, terms)


def tensor_with_ancilla(H: PauliSum, mu: PauliString) -> PauliSum:
    """Extend every term of ``H`` by ``mu`` on trailing ancilla qubits."""
    if len(mu) < 1:
        raise DimensionError("ancilla string must cover at least one qubit")
    return PauliSum(H.n_qubits + len(mu), [(t.coefficient, t.string + mu) for t in H])


def dense_matrix(P: PauliSum, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``P``."""
    if P.n_qubits > limit:
        raise SizeLimitError(f"{P.n_qubits} qubits exceeds dense limit {limit}")
    dim = 1 << P.n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    for _, src, phase in P._compiled():
        mat[rows, src] += phase
    return mat
