"""Purified initial state and the layered brick-wall variational circuit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import DimensionError
from .statevector import GateKind, GateSpec, StateVector, apply_gate_array


@dataclass(frozen=True)
class Circuit:
    """Ordered gates acting on physical qubits, with a parameter table.

    ``n_ancilla`` records the width of the purifying register the circuit is
    meant to run next to; the gates never touch it.
    """

    n_physical: int
    n_ancilla: int
    gates: tuple[GateSpec, ...]
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        used = set()
        for g in self.gates:
            if max(g.qubits) >= self.n_physical:
                raise ValueError(f"gate {g} touches a non-physical qubit")
            if g.param_index is not None:
                if not 0 <= g.param_index < self.n_params:
                    raise ValueError(f"param_index {g.param_index} outside [0, {self.n_params})")
                used.add(g.param_index)
        if used != set(range(self.n_params)):
            raise ValueError("some parameters are not attached to any gate")

    @property
    def n_qubits(self) -> int:
        return self.n_physical + self.n_ancilla

    @property
    def parameterized_gates(self) -> list[tuple[int, GateSpec]]:
        return [(i, g) for i, g in enumerate(self.gates) if g.param_index is not None]

    def angles(self, theta) -> list[float | None]:
        """Per-gate angle list for a parameter vector."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        return [None if g.param_index is None else float(theta[g.param_index]) for g in self.gates]

    def to_text(self) -> str:
        """One gate per line: ``KIND q[,q] param_index`` (``-`` for fixed gates)."""
        lines = [f"# n_physical={self.n_physical} n_ancilla={self.n_ancilla} n_params={self.n_params}"]
        for g in self.gates:
            p = "-" if g.param_index is None else str(g.param_index)
            lines.append(f"{g.kind.value} {','.join(map(str, g.qubits))} {p}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        header, *body = [ln for ln in text.splitlines() if ln.strip()]
        meta = dict(kv.split("=") for kv in header.lstrip("#").split())
        gates = []
        for ln in body:
            kind, qubits, p = ln.split()
            gates.append(
                GateSpec(GateKind(kind), tuple(int(q) for q in qubits.split(",")), None if p == "-" else int(p))
            )
        return cls(int(meta["n_physical"]), int(meta["n_ancilla"]), tuple(gates), int(meta["n_params"]))


def entangler_gates(n_physical: int, n_ancilla: int) -> list[GateSpec]:
    """Hadamard on physical qubit i, then CNOT onto ancilla i, for i < n_ancilla."""
    gates = []
    for i in range(n_ancilla):
        gates.append(GateSpec(GateKind.HADAMARD, (i,)))
        gates.append(GateSpec(GateKind.CNOT, (i, n_physical + i)))
    return gates


def build_initial_state(n_physical: int, n_ancilla: int) -> StateVector:
    """Bell pairs between physical qubit i and ancilla i; remaining physical qubits in |0>.

    Equivalent to ``M**-1/2 sum_alpha |alpha, p>|alpha, a>`` where the first
    ``n_ancilla`` physical bits spell alpha.
    """
    if not 1 <= n_ancilla <= n_physical:
        raise ValueError(f"need 1 <= n_ancilla <= n_physical, got {n_ancilla}, {n_physical}")
    n = n_physical + n_ancilla
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    for g in entangler_gates(n_physical, n_ancilla):
        apply_gate_array(amps, n, g.kind, g.qubits)
    return StateVector(n, amps)


def brick_wall_pairs(n: int, bc: str = "open") -> list[tuple[int, int]]:
    """Nearest-neighbour pairs, even bonds first, then odd bonds (wrap bond last)."""
    if bc not in ("open", "periodic"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    even = [(i, i + 1) for i in range(0, n - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n - 1, 2)]
    if bc == "periodic" and n > 2:
        odd.append((n - 1, 0))
    return even + odd


def build_layered_ansatz(
    n_physical: int,
    n_layers: int,
    bc: str = "open",
    n_ancilla: int = 0,
    shared_parameters: bool = False,
) -> Circuit:
    """Layered circuit: RYY sublayer, RZZ sublayer, then RX, RZ, RX on every qubit.

    Each gate gets its own parameter unless ``shared_parameters`` is set, in
    which case each of the five sublayers of a layer shares one angle.
    """
    if n_physical < 2 or n_layers < 1:
        raise ValueError(f"need n_physical >= 2 and n_layers >= 1, got {n_physical}, {n_layers}")
    pairs = brick_wall_pairs(n_physical, bc)
    gates: list[GateSpec] = []
    counter = 0

    def sublayer(kind, targets):
        nonlocal counter
        for t in targets:
            gates.append(GateSpec(kind, t, counter))
            if not shared_parameters:
                counter += 1
        if shared_parameters:
            counter += 1

    singles = [(q,) for q in range(n_physical)]
    for _ in range(n_layers):
        sublayer(GateKind.RYY, pairs)
        sublayer(GateKind.RZZ, pairs)
        sublayer(GateKind.RX, singles)
        sublayer(GateKind.RZ, singles)
        sublayer(GateKind.RX, singles)
    return Circuit(n_physical, n_ancilla, tuple(gates), counter)


def run_gates(amps: np.ndarray, n_qubits: int, circuit: Circuit, angles) -> None:
    """Apply every gate of ``circuit`` in place to ``amps`` (optionally batched)."""
    for g, a in zip(circuit.gates, angles):
        apply_gate_array(amps, n_qubits, g.kind, g.qubits, a)


def apply_ansatz(initial: StateVector, circuit: Circuit, theta) -> StateVector:
    """``(U(theta) (x) I_ancilla) |initial>``."""
    angles = circuit.angles(theta)
    if initial.n_qubits != circuit.n_qubits:
        raise DimensionError(f"state has {initial.n_qubits} qubits, circuit expects {circuit.n_qubits}")
    # physical qubits lead, so the ancilla register is a trailing batch axis
    amps = initial.amplitudes.reshape(1 << circuit.n_physical, -1).copy()
    run_gates(amps, circuit.n_physical, circuit, angles)
    out = StateVector(initial.n_qubits, amps.reshape(-1), check_norm=False)
    if abs(out.norm - 1.0) > 1e-10:
        raise RuntimeError(f"norm drift {out.norm - 1.0:.2e} after circuit")
    return out
