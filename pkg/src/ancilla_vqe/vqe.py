"""Loss, gradients and the restart-based optimizer.

For a purified state ``M**-1/2 sum_alpha U|alpha,p>|alpha,a>`` the quantity
``M <psi| H (x) |alpha><alpha| |psi>`` is simply ``<alpha,p|U^H H U|alpha,p>``.
Evaluation therefore propagates only the K trial columns ``U|alpha,p>``
(alpha < K) through the circuit as one batched array of shape
``(2**n_physical, K)``; the full system+ancilla state is never needed here.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .ansatz import Circuit, run_gates
from .exact import initial_basis_indices
from .pauli import PauliSum

logger = logging.getLogger(__name__)

ALGORITHMS = ("lbfgs", "adam", "gd")
GRADIENT_MODES = ("adjoint", "parameter-shift")


def _check(circuit: Circuit, H: PauliSum, K: int) -> None:
    if H.n_qubits != circuit.n_physical:
        raise ValueError(f"Hamiltonian on {H.n_qubits} qubits, circuit has {circuit.n_physical} physical")
    if not 1 <= K <= 1 << circuit.n_ancilla:
        raise ValueError(f"K={K} outside [1, 2**n_ancilla={1 << circuit.n_ancilla}]")


def initial_block(circuit: Circuit, K: int) -> np.ndarray:
    """Columns |alpha, p> for alpha < K."""
    block = np.zeros((1 << circuit.n_physical, K), dtype=complex)
    idx = initial_basis_indices(circuit.n_physical, circuit.n_ancilla)[:K]
    block[idx, np.arange(K)] = 1.0
    return block


class Problem:
    """A circuit, Hamiltonian and target count K, pre-encoded for the compiled kernels."""

    def __init__(self, circuit: Circuit, H: PauliSum, K: int):
        _check(circuit, H, K)
        self.circuit = circuit
        self.H = H
        self.K = K
        self.kinds, self.qa, self.qb, self.pidx = _kernels.encode_circuit(circuit)
        self.srcs, self.phases = _kernels.encode_hamiltonian(H)
        self._init = initial_block(circuit, K)

    def gate_angles(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.circuit.n_params,):
            raise ValueError(f"expected {self.circuit.n_params} parameters, got shape {theta.shape}")
        angles = np.zeros(len(self.kinds))
        live = self.pidx >= 0
        angles[live] = theta[self.pidx[live]]
        return angles

    def trial_states(self, angles: np.ndarray) -> np.ndarray:
        phi = self._init.copy()
        _kernels.run_circuit(phi, self.circuit.n_physical, self.kinds, self.qa, self.qb, angles)
        return phi

    def subspace_at(self, angles: np.ndarray) -> np.ndarray:
        phi = self.trial_states(angles)
        return phi.conj().T @ _kernels.apply_hamiltonian(self.srcs, self.phases, phi)

    def adjoint(self, theta):
        """(K x K trial-state Hamiltonian matrix, gradient of its trace)."""
        return _kernels.adjoint_pass(
            self._init.copy(),
            self.circuit.n_physical,
            self.kinds,
            self.qa,
            self.qb,
            self.pidx,
            self.gate_angles(theta),
            self.srcs,
            self.phases,
            self.circuit.n_params,
        )

    def parameter_shift(self, theta) -> np.ndarray:
        angles = self.gate_angles(theta)
        grad = np.zeros(self.circuit.n_params)
        for g in np.flatnonzero(self.pidx >= 0):
            shifted = angles.copy()
            shifted[g] += math.pi / 2
            plus = np.trace(self.subspace_at(shifted)).real
            shifted[g] -= math.pi
            minus = np.trace(self.subspace_at(shifted)).real
            grad[self.pidx[g]] += 0.5 * (plus - minus)
        return grad


def trial_states(theta, circuit: Circuit, K: int) -> np.ndarray:
    """``U(theta)|alpha, p>`` for alpha < K, as columns."""
    block = initial_block(circuit, K)
    run_gates(block, circuit.n_physical, circuit, circuit.angles(theta))
    return block


def subspace_matrix(theta, circuit: Circuit, H: PauliSum, K: int) -> np.ndarray:
    """K x K matrix ``<beta-bar|H|alpha-bar>`` of the trial states."""
    prob = Problem(circuit, H, K)
    return prob.subspace_at(prob.gate_angles(theta))


def state_energies(theta, circuit: Circuit, H: PauliSum, K: int) -> np.ndarray:
    """Per-trial-state energies ``<alpha-bar|H|alpha-bar>``, alpha < K."""
    return subspace_matrix(theta, circuit, H, K).diagonal().real.copy()


def loss(theta, circuit: Circuit, H: PauliSum, K: int) -> float:
    """Sum of the K trial-state energies."""
    return float(np.sum(state_energies(theta, circuit, H, K)))


def grad_parameter_shift(theta, circuit: Circuit, H: PauliSum, K: int) -> np.ndarray:
    """Gradient by the two-term shift rule, one +-pi/2 pair per gate occurrence.

    Gates sharing a parameter contribute additively.
    """
    return Problem(circuit, H, K).parameter_shift(theta)


def grad_adjoint(theta, circuit: Circuit, H: PauliSum, K: int) -> np.ndarray:
    """Exact gradient from a reverse sweep; same contract as the shift rule."""
    return Problem(circuit, H, K).adjoint(theta)[1]


# --- optimizer ---------------------------------------------------------------


@dataclass
class OptimizerConfig:
    algorithm: str = "lbfgs"
    learning_rate: float = 0.01
    lr_final: float | None = None
    iterations: int = 6001
    restarts: int = 21
    init_low: float = 0.0
    init_high: float = 0.1
    seed: int = 0
    gradient_mode: str = "adjoint"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    early_stop_grad_norm: float | None = None
    history_size: int = 20
    threads: int = 1

    def step_size(self, it: int) -> float:
        """Learning rate at update ``it``; geometric decay to ``lr_final`` when set."""
        if self.lr_final is None or self.iterations < 2:
            return self.learning_rate
        frac = it / (self.iterations - 1)
        return self.learning_rate * (self.lr_final / self.learning_rate) ** frac

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}, got {self.gradient_mode!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.lr_final is not None and not self.lr_final > 0:
            raise ValueError("lr_final must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.init_low > self.init_high:
            raise ValueError("init_low must not exceed init_high")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class TrainTrace:
    """One record per iteration: loss, trial-state energies and Ritz values."""

    K: int
    loss: list[float] = field(default_factory=list)
    energies: list[np.ndarray] = field(default_factory=list)
    ritz: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loss)

    def append(self, energies: np.ndarray, ritz: np.ndarray) -> None:
        self.loss.append(float(np.sum(energies)))
        self.energies.append(np.asarray(energies, dtype=float))
        self.ritz.append(np.asarray(ritz, dtype=float))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "loss"] + [f"E_{i}" for i in range(self.K)])
            for m, (l, e) in enumerate(zip(self.loss, self.energies)):
                w.writerow([m, repr(l)] + [repr(float(x)) for x in e])

    def write_ritz_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m"] + [f"R_{i}" for i in range(self.K)])
            for m, r in enumerate(self.ritz):
                w.writerow([m] + [repr(float(x)) for x in r])

    @classmethod
    def read_csv(cls, path) -> "TrainTrace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        K = len(header) - 2
        tr = cls(K)
        for row in body:
            tr.loss.append(float(row[1]))
            tr.energies.append(np.array([float(x) for x in row[2:]]))
        return tr


@dataclass
class RestartSummary:
    restart: int
    status: str
    final_loss: float
    iterations_run: int
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimizeResult:
    theta: np.ndarray
    trace: TrainTrace
    best_restart: int
    summaries: list[RestartSummary]


def restart_seeds(seed: int, restarts: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(restarts)


class _Aborted(Exception):
    pass


def _evaluate(config: OptimizerConfig, problem: Problem, theta):
    if config.gradient_mode == "adjoint":
        sub, grad = problem.adjoint(theta)
    else:
        sub = problem.subspace_at(problem.gate_angles(theta))
        grad = problem.parameter_shift(theta)
    if not (np.all(np.isfinite(sub)) and np.all(np.isfinite(grad))):
        raise _Aborted("non-finite loss or gradient")
    return sub, grad


def _record(trace: TrainTrace, sub: np.ndarray) -> None:
    trace.append(sub.diagonal().real.copy(), np.linalg.eigvalsh(0.5 * (sub + sub.conj().T)))


def _run_first_order(config, problem, theta, trace):
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    b1, b2 = config.beta1, config.beta2
    for it in range(config.iterations):
        sub, grad = _evaluate(config, problem, theta)
        _record(trace, sub)
        if it == config.iterations - 1:
            break
        if config.early_stop_grad_norm is not None and np.linalg.norm(grad) < config.early_stop_grad_norm:
            return theta, f"gradient norm below {config.early_stop_grad_norm:g}"
        lr = config.step_size(it)
        if config.algorithm == "gd":
            theta -= lr * grad
        else:
            t = it + 1
            m1 = b1 * m1 + (1 - b1) * grad
            m2 = b2 * m2 + (1 - b2) * grad**2
            mhat = m1 / (1 - b1**t)
            vhat = m2 / (1 - b2**t)
            theta -= lr * mhat / (np.sqrt(vhat) + config.epsilon)
    return theta, ""


def _run_lbfgs(config, problem, theta, trace):
    last = {}
    accepted = [theta.copy()]

    def fun(x):
        sub, grad = _evaluate(config, problem, x)
        last.update(x=x.copy(), sub=sub, grad=grad)
        return float(np.trace(sub).real), grad

    def callback(xk):
        if not np.array_equal(last.get("x"), xk):
            fun(xk)
        _record(trace, last["sub"])
        accepted[0] = np.array(xk, dtype=float)
        if config.early_stop_grad_norm is not None and np.linalg.norm(last["grad"]) < config.early_stop_grad_norm:
            raise StopIteration

    sub, _ = _evaluate(config, problem, theta)
    _record(trace, sub)
    if config.iterations == 1:
        return theta, ""
    res = minimize(
        fun,
        theta,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options=dict(
            maxiter=config.iterations - 1,
            maxfun=20 * config.iterations,
            maxcor=config.history_size,
            ftol=0.0,
            gtol=0.0,
        ),
    )
    # a failed line search leaves res.x at a rejected trial point; the trace ends at the accepted one
    msg = ""
    if len(trace) < config.iterations:
        msg = f"stopped after {len(trace) - 1} iterations: {res.message}"
    return accepted[0], msg


def run_single(config: OptimizerConfig, problem: Problem, theta0: np.ndarray):
    """Optimize from one starting point. Returns (theta, trace, status, message).

    The trace holds the starting point plus one record per iteration, at
    most ``config.iterations`` records in total.
    """
    theta = np.array(theta0, dtype=float)
    trace = TrainTrace(problem.K)
    runner = _run_lbfgs if config.algorithm == "lbfgs" else _run_first_order
    try:
        theta, msg = runner(config, problem, theta, trace)
    except _Aborted as exc:
        return theta, trace, "aborted", f"{exc} after {len(trace)} records"
    return theta, trace, "ok", msg


def _restart_job(args):
    r, ss, config, circuit, H, K = args
    rng = np.random.default_rng(ss)
    theta0 = rng.uniform(config.init_low, config.init_high, circuit.n_params)
    theta, trace, status, msg = run_single(config, Problem(circuit, H, K), theta0)
    final = trace.loss[-1] if (status == "ok" and len(trace)) else math.nan
    logger.info("restart %d: %s final loss %.12f", r, status, final)
    return theta, trace, RestartSummary(r, status, final, len(trace), msg)


def optimize(config: OptimizerConfig, circuit: Circuit, H: PauliSum, K: int) -> OptimizeResult:
    """Independent seeded restarts; the one with the lowest final loss wins."""
    _check(circuit, H, K)
    jobs = [(r, ss, config, circuit, H, K) for r, ss in enumerate(restart_seeds(config.seed, config.restarts))]
    if config.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(_restart_job, jobs))
    else:
        results = [_restart_job(j) for j in jobs]
    summaries = [s for _, _, s in results]
    ok = [i for i, s in enumerate(summaries) if s.status == "ok"]
    if not ok:
        raise RuntimeError("every restart aborted: " + "; ".join(s.message for s in summaries))
    best = min(ok, key=lambda i: summaries[i].final_loss)
    theta, trace, _ = results[best]
    return OptimizeResult(theta, trace, best, summaries)
