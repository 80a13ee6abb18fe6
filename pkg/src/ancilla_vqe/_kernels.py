"""Compiled inner loops for the optimizer.

These mirror the numpy kernels in ``statevector`` gate for gate; the test
suite checks the two against each other.  Amplitude arrays are 2-D,
``(2**n, batch)``, and gates are encoded as integer codes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .statevector import GateKind

RX, RZ, RYY, RZZ, HAD, CNOT = 0, 1, 2, 3, 4, 5
CODES = {
    GateKind.RX: RX,
    GateKind.RZ: RZ,
    GateKind.RYY: RYY,
    GateKind.RZZ: RZZ,
    GateKind.HADAMARD: HAD,
    GateKind.CNOT: CNOT,
}


def encode_circuit(circuit):
    """Integer arrays (kind, qubit_a, qubit_b, param_index) for a Circuit; -1 marks absent."""
    g = circuit.gates
    kinds = np.array([CODES[x.kind] for x in g], dtype=np.int64)
    qa = np.array([x.qubits[0] for x in g], dtype=np.int64)
    qb = np.array([x.qubits[1] if len(x.qubits) > 1 else -1 for x in g], dtype=np.int64)
    pidx = np.array([-1 if x.param_index is None else x.param_index for x in g], dtype=np.int64)
    return kinds, qa, qb, pidx


def encode_hamiltonian(H):
    """Stacked (source index, coefficient * phase) arrays for every term."""
    action = H._compiled()
    if not action:
        dim = 1 << H.n_qubits
        return np.zeros((0, dim), dtype=np.int64), np.zeros((0, dim), dtype=np.complex128)
    srcs = np.stack([a[1] for a in action]).astype(np.int64)
    phases = np.stack([a[2] for a in action]).astype(np.complex128)
    return srcs, phases


@njit(cache=True)
def _gate(psi, n, kind, qa, qb, angle):
    dim, B = psi.shape
    ma = 1 << (n - 1 - qa)
    if kind == RX or kind == RZ or kind == HAD:
        if kind == RX:
            c = np.cos(0.5 * angle)
            s = np.sin(0.5 * angle)
            u00 = complex(c, 0.0)
            u01 = complex(0.0, -s)
            u10 = u01
            u11 = u00
        elif kind == RZ:
            u00 = np.exp(complex(0.0, -0.5 * angle))
            u01 = 0j
            u10 = 0j
            u11 = np.exp(complex(0.0, 0.5 * angle))
        else:
            r = 0.7071067811865476
            u00 = complex(r, 0.0)
            u01 = u00
            u10 = u00
            u11 = -u00
        for i in range(dim):
            if i & ma:
                continue
            j = i | ma
            for b in range(B):
                x = psi[i, b]
                y = psi[j, b]
                psi[i, b] = u00 * x + u01 * y
                psi[j, b] = u10 * x + u11 * y
        return
    mb = 1 << (n - 1 - qb)
    if kind == CNOT:
        # qa control, qb target
        for i in range(dim):
            if (i & ma) and not (i & mb):
                j = i | mb
                for b in range(B):
                    t = psi[i, b]
                    psi[i, b] = psi[j, b]
                    psi[j, b] = t
        return
    if kind == RZZ:
        same = np.exp(complex(0.0, -0.5 * angle))
        diff = np.exp(complex(0.0, 0.5 * angle))
        for i in range(dim):
            f = diff if ((i & ma) != 0) != ((i & mb) != 0) else same
            for b in range(B):
                psi[i, b] *= f
        return
    # RYY: |00> <-> |11> with +i s, |01> <-> |10> with -i s
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    for i in range(dim):
        if (i & ma) or (i & mb):
            continue
        i11 = i | ma | mb
        i01 = i | mb
        i10 = i | ma
        for b in range(B):
            x = psi[i, b]
            y = psi[i11, b]
            psi[i, b] = c * x + 1j * s * y
            psi[i11, b] = c * y + 1j * s * x
            x = psi[i01, b]
            y = psi[i10, b]
            psi[i01, b] = c * x - 1j * s * y
            psi[i10, b] = c * y - 1j * s * x


@njit(cache=True)
def _generator_overlap(lam, phi, n, kind, qa, qb):
    # Im <lam| Q |phi> for the rotation generator Q of the gate
    dim, B = phi.shape
    ma = 1 << (n - 1 - qa)
    acc = 0j
    if kind == RX:
        for i in range(dim):
            j = i ^ ma
            for b in range(B):
                acc += np.conj(lam[i, b]) * phi[j, b]
    elif kind == RZ:
        for i in range(dim):
            sg = -1.0 if i & ma else 1.0
            for b in range(B):
                acc += sg * np.conj(lam[i, b]) * phi[i, b]
    else:
        mb = 1 << (n - 1 - qb)
        for i in range(dim):
            odd = ((i & ma) != 0) != ((i & mb) != 0)
            if kind == RZZ:
                sg = -1.0 if odd else 1.0
                for b in range(B):
                    acc += sg * np.conj(lam[i, b]) * phi[i, b]
            else:
                sg = 1.0 if odd else -1.0
                j = i ^ ma ^ mb
                for b in range(B):
                    acc += sg * np.conj(lam[i, b]) * phi[j, b]
    return acc.imag


@njit(cache=True)
def apply_hamiltonian(srcs, phases, psi):
    out = np.zeros_like(psi)
    T, dim = srcs.shape
    B = psi.shape[1]
    for t in range(T):
        for i in range(dim):
            p = phases[t, i]
            j = srcs[t, i]
            for b in range(B):
                out[i, b] += p * psi[j, b]
    return out


@njit(cache=True)
def run_circuit(psi, n, kinds, qa, qb, angles):
    for g in range(kinds.shape[0]):
        _gate(psi, n, kinds[g], qa[g], qb[g], angles[g])


@njit(cache=True)
def adjoint_pass(phi, n, kinds, qa, qb, pidx, angles, srcs, phases, n_params):
    """Forward sweep, Hamiltonian action, reverse sweep.

    ``phi`` holds the initial trial columns and is consumed.  Returns the
    subspace matrix ``phi^H H phi`` at the output and the gradient of its trace.
    """
    run_circuit(phi, n, kinds, qa, qb, angles)
    lam = apply_hamiltonian(srcs, phases, phi)
    B = phi.shape[1]
    sub = np.zeros((B, B), dtype=np.complex128)
    for i in range(phi.shape[0]):
        for a in range(B):
            ca = np.conj(phi[i, a])
            for b in range(B):
                sub[a, b] += ca * lam[i, b]
    grad = np.zeros(n_params)
    for g in range(kinds.shape[0] - 1, -1, -1):
        k = kinds[g]
        if pidx[g] >= 0:
            grad[pidx[g]] += _generator_overlap(lam, phi, n, k, qa[g], qb[g])
            _gate(phi, n, k, qa[g], qb[g], -angles[g])
            _gate(lam, n, k, qa[g], qb[g], -angles[g])
        else:
            _gate(phi, n, k, qa[g], qb[g], 0.0)
            _gate(lam, n, k, qa[g], qb[g], 0.0)
    return sub, grad
