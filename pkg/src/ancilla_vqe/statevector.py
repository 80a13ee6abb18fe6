"""Dense statevector simulation.

Gates are applied by reshaping the amplitude array so that the target
qubits become their own axes; no gate matrix over the full register is ever
formed.  All kernels accept arrays of shape ``(2**n,)`` or ``(2**n, B)``;
the trailing axis is a batch of independent states, which is how the trial
states of the variational circuit are propagated together.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .pauli import DimensionError, PauliSum

NORM_TOL = 1e-10
IMAG_TOL = 1e-10


class ConsistencyError(RuntimeError):
    """A quantity that must be real/Hermitian/normalized is not."""


class GateKind(enum.Enum):
    RX = "RX"
    RZ = "RZ"
    RYY = "RYY"
    RZZ = "RZZ"
    HADAMARD = "H"
    CNOT = "CNOT"

    @property
    def parameterized(self) -> bool:
        return self in _PARAMETERIZED

    @property
    def arity(self) -> int:
        return 1 if self in (GateKind.RX, GateKind.RZ, GateKind.HADAMARD) else 2


_PARAMETERIZED = frozenset({GateKind.RX, GateKind.RZ, GateKind.RYY, GateKind.RZZ})


@dataclass(frozen=True)
class GateSpec:
    kind: GateKind
    qubits: tuple[int, ...]
    param_index: int | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != kind.arity:
            raise ValueError(f"{kind.name} acts on {kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits) or min(self.qubits) < 0:
            raise ValueError(f"invalid qubit indices {self.qubits}")
        if kind.parameterized and self.param_index is None:
            raise ValueError(f"{kind.name} needs a param_index")
        if not kind.parameterized and self.param_index is not None:
            raise ValueError(f"{kind.name} takes no parameter")

    @property
    def generator(self) -> str:
        """Pauli label Q of a rotation exp(-i theta Q / 2)."""
        return {GateKind.RX: "X", GateKind.RZ: "Z", GateKind.RYY: "YY", GateKind.RZZ: "ZZ"}[self.kind]


class StateVector:
    """Amplitudes over ``n_qubits`` qubits, qubit 0 most significant."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes, check_norm: bool = True):
        amps = np.ascontiguousarray(amplitudes, dtype=complex)
        if amps.shape != (1 << n_qubits,):
            raise DimensionError(f"expected {1 << n_qubits} amplitudes, got shape {amps.shape}")
        if check_norm and abs(np.vdot(amps, amps).real - 1.0) > NORM_TOL:
            raise ConsistencyError(f"state norm {np.linalg.norm(amps)} differs from 1")
        self.n_qubits = n_qubits
        self.amplitudes = amps

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy(), check_norm=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def init_basis_state(n_qubits: int, bits: str) -> StateVector:
    """Computational basis state; ``bits[0]`` is qubit 0."""
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise DimensionError(f"bitstring {bits!r} does not describe {n_qubits} qubits")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(n_qubits, amps)


# --- kernels -----------------------------------------------------------------


def _view1(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    return amps.reshape(1 << q, 2, -1)


def _view2(amps: np.ndarray, n: int, q1: int, q2: int) -> np.ndarray:
    # q1 < q2; axes 1 and 3 are the two qubits
    return amps.reshape(1 << q1, 2, 1 << (q2 - q1 - 1), 2, -1)


def apply_gate_array(amps: np.ndarray, n_qubits: int, kind: GateKind, qubits, angle=None) -> None:
    """Apply one gate in place to a C-contiguous amplitude array."""
    if kind is GateKind.RX or kind is GateKind.RZ or kind is GateKind.HADAMARD:
        (q,) = qubits
        v = _view1(amps, n_qubits, q)
        a0 = v[:, 0]
        a1 = v[:, 1]
        if kind is GateKind.RZ:
            ph = np.exp(-0.5j * angle)
            a0 *= ph
            a1 *= ph.conjugate()
        elif kind is GateKind.RX:
            c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
            t0 = a0.copy()
            a0 *= c
            a0 -= 1j * s * a1
            a1 *= c
            a1 -= 1j * s * t0
        else:
            t0 = a0.copy()
            a0 += a1
            a0 *= 0.5**0.5
            t0 -= a1
            a1[...] = t0 * 0.5**0.5
        return

    if kind is GateKind.CNOT:
        ctrl, tgt = qubits
        if ctrl < tgt:
            v = _view2(amps, n_qubits, ctrl, tgt)
            t = v[:, 1, :, 0].copy()
            v[:, 1, :, 0] = v[:, 1, :, 1]
            v[:, 1, :, 1] = t
        else:
            v = _view2(amps, n_qubits, tgt, ctrl)
            t = v[:, 0, :, 1].copy()
            v[:, 0, :, 1] = v[:, 1, :, 1]
            v[:, 1, :, 1] = t
        return

    q1, q2 = sorted(qubits)
    v = _view2(amps, n_qubits, q1, q2)
    if kind is GateKind.RZZ:
        ph = np.exp(-0.5j * angle)
        v[:, 0, :, 0] *= ph
        v[:, 1, :, 1] *= ph
        v[:, 0, :, 1] *= ph.conjugate()
        v[:, 1, :, 0] *= ph.conjugate()
    elif kind is GateKind.RYY:
        # YY|00> = -|11>, YY|01> = |10>
        c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
        for (i, j), (k, l), sgn in (((0, 0), (1, 1), 1j * s), ((0, 1), (1, 0), -1j * s)):
            a = v[:, i, :, j]
            b = v[:, k, :, l]
            ta = a.copy()
            a *= c
            a += sgn * b
            b *= c
            b += sgn * ta
    else:
        raise ValueError(f"unsupported gate kind {kind}")


def apply_pauli_rotation_generator(amps: np.ndarray, n_qubits: int, gate: GateSpec) -> np.ndarray:
    """Return ``Q @ amps`` for the generator Q of a parameterized gate."""
    out = amps.copy()
    labels = {"X": "X", "Z": "Z", "YY": "Y", "ZZ": "Z"}
    letter = labels[gate.generator]
    for q in gate.qubits:
        v = _view1(out, n_qubits, q)
        if letter == "X":
            v[:, [0, 1]] = v[:, [1, 0]]
        elif letter == "Z":
            v[:, 1] *= -1
        else:
            t = v[:, 0].copy()
            v[:, 0] = -1j * v[:, 1]
            v[:, 1] = 1j * t
    return out


def apply_gate(state: StateVector, gate: GateSpec, angle: float | None = None) -> StateVector:
    """Return ``U_gate |state>`` as a new StateVector."""
    if gate.kind.parameterized and angle is None:
        raise TypeError(f"{gate.kind.name} requires an angle")
    if not gate.kind.parameterized and angle is not None:
        raise TypeError(f"{gate.kind.name} takes no angle")
    if max(gate.qubits) >= state.n_qubits:
        raise DimensionError(f"gate on {gate.qubits} does not fit {state.n_qubits} qubits")
    out = state.amplitudes.copy()
    apply_gate_array(out, state.n_qubits, gate.kind, gate.qubits, angle)
    return StateVector(state.n_qubits, out, check_norm=False)


# --- measurement -------------------------------------------------------------


def _real(z: complex, what: str) -> float:
    if abs(z.imag) > IMAG_TOL * max(1.0, abs(z.real)):
        raise ConsistencyError(f"{what} has imaginary part {z.imag:.3e}")
    return float(z.real)


def expectation(state: StateVector, P: PauliSum) -> float:
    """<state|P|state> for a Hermitian Pauli sum."""
    if P.n_qubits != state.n_qubits:
        raise DimensionError(f"operator on {P.n_qubits} qubits, state on {state.n_qubits}")
    return _real(np.vdot(state.amplitudes, P.apply(state.amplitudes)), "expectation value")


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError("states have different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def ancilla_block(state: StateVector, n_physical: int) -> np.ndarray:
    """Amplitudes arranged as ``(2**n_physical, 2**n_ancilla)``.

    Column ``alpha`` is the unnormalized physical state paired with ancilla
    basis state ``alpha``.  Returns a view.
    """
    if not 1 <= n_physical <= state.n_qubits:
        raise DimensionError(f"n_physical={n_physical} incompatible with {state.n_qubits} qubits")
    return state.amplitudes.reshape(1 << n_physical, -1)


def project_ancilla(state: StateVector, n_physical: int, alpha: int) -> tuple[StateVector, float]:
    """Physical state conditioned on ancilla outcome ``alpha``.

    Returns the renormalized physical state and the norm of the projection.
    """
    block = ancilla_block(state, n_physical)
    if not 0 <= alpha < block.shape[1]:
        raise IndexError(f"ancilla index {alpha} out of range [0, {block.shape[1]})")
    col = block[:, alpha]
    norm = float(np.linalg.norm(col))
    if norm == 0.0:
        raise ConsistencyError(f"ancilla outcome {alpha} has zero probability")
    return StateVector(n_physical, col / norm), norm


def expectation_with_ancilla_projector(state: StateVector, H: PauliSum, alpha: int) -> float:
    """<state| H (x) |alpha><alpha|_ancilla |state> for ``H`` over the physical qubits."""
    block = ancilla_block(state, H.n_qubits)
    if not 0 <= alpha < block.shape[1]:
        raise IndexError(f"ancilla index {alpha} out of range [0, {block.shape[1]})")
    col = np.ascontiguousarray(block[:, alpha])
    return _real(np.vdot(col, H.apply(col)), "projected expectation")


def sample_bitstrings(state: StateVector, shots: int, seed: int) -> dict[str, int]:
    """Draw ``shots`` computational-basis measurements."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    p = state.probabilities()
    counts = rng.multinomial(shots, p / p.sum())
    n = state.n_qubits
    return {format(i, f"0{n}b"): int(c) for i in np.flatnonzero(counts) for c in (counts[i],)}
