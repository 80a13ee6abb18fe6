"""Command-line experiment runner.

Experiments are described by one JSON document (see ``configs/``); command
line flags override individual keys.  Output files:

* ``trace.csv``      m, loss, E_0..E_{K-1} of the best restart
* ``trace_ritz.csv`` m, R_0..R_{K-1} (Ritz values of the K trial states)
* ``summary.json``   restarts, final eigenvalues, oracle errors, theta
* ``subspace.json``  measured subspace matrix and its eigenpairs
* ``config.json``    the fully resolved configuration
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .ansatz import Circuit, apply_ansatz, build_initial_state, build_layered_ansatz
from .exact import EXACT_LIMIT, Spectrum, exact_eigenpairs, overlap_matrix, overlap_rank, write_spectrum_csv
from .pauli import PauliString, PauliSum, build_tfim
from .subspace import MODES, SubspaceResult, classical_thermal_average, thermal_expectation
from .vqe import OptimizerConfig, OptimizeResult, optimize

logger = logging.getLogger("ancilla_vqe")

OUTPUT_ENV = "ANCILLA_VQE_OUTPUT"
DEFAULT_OUTPUT = "runs"


class ConfigError(ValueError):
    """A configuration value violates one of the documented constraints."""


@dataclass
class ModelConfig:
    n: int = 8
    J: float = 1.0
    h_x: float = 0.5
    bc: str = "open"


@dataclass
class AnsatzConfig:
    n_ancilla: int = 2
    K: int = 4
    layers: int = 6
    shared_parameters: bool = False
    # how many of the lowest Ritz values are reported and scored; defaults to K
    targets: int | None = None


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    subspace_mode: str = "k-block"
    oracle: bool = True
    output_dir: str | None = None

    @property
    def n_targets(self) -> int:
        return self.ansatz.K if self.ansatz.targets is None else self.ansatz.targets

    def validate(self) -> "ExperimentConfig":
        m, a = self.model, self.ansatz
        if m.n < 2:
            raise ConfigError(f"model.n must be >= 2 (got {m.n})")
        if m.bc not in ("open", "periodic"):
            raise ConfigError(f"model.bc must be 'open' or 'periodic' (got {m.bc!r})")
        if m.bc == "periodic" and m.n < 3:
            raise ConfigError("periodic chains need model.n >= 3")
        if a.layers < 1:
            raise ConfigError(f"ansatz.layers must be >= 1 (got {a.layers})")
        if not 1 <= a.n_ancilla <= m.n:
            raise ConfigError(f"need 1 <= ansatz.n_ancilla <= model.n (got N_a={a.n_ancilla}, n={m.n})")
        if not 1 <= a.K <= 1 << a.n_ancilla:
            raise ConfigError(f"need 1 <= K <= 2**N_a = {1 << a.n_ancilla} (got K={a.K})")
        if not 1 <= self.n_targets <= a.K:
            raise ConfigError(f"need 1 <= ansatz.targets <= K = {a.K} (got {self.n_targets})")
        if self.subspace_mode not in MODES:
            raise ConfigError(f"subspace_mode must be one of {MODES} (got {self.subspace_mode!r})")
        if self.oracle and m.n > EXACT_LIMIT:
            raise ConfigError(f"oracle needs model.n <= {EXACT_LIMIT} (got {m.n})")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        def build(kind, data, where):
            if data is None:
                return kind()
            if not isinstance(data, dict):
                raise ConfigError(f"{where} must be an object")
            known = {f.name for f in fields(kind)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
            try:
                return kind(**data)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where}: {exc}") from None

        top = {k: v for k, v in d.items() if k not in ("model", "ansatz", "optimizer")}
        cfg = build(cls, top, "config")
        cfg.model = build(ModelConfig, d.get("model"), "model")
        cfg.ansatz = build(AnsatzConfig, d.get("ansatz"), "ansatz")
        cfg.optimizer = build(OptimizerConfig, d.get("optimizer"), "optimizer")
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)


# --- building blocks ----------------------------------------------------------


def hamiltonian(cfg: ExperimentConfig) -> PauliSum:
    m = cfg.model
    return build_tfim(m.n, m.J, m.h_x, m.bc)


def circuit(cfg: ExperimentConfig) -> Circuit:
    a = cfg.ansatz
    return build_layered_ansatz(cfg.model.n, a.layers, cfg.model.bc, a.n_ancilla, a.shared_parameters)


_SPECTRUM_CACHE: dict = {}


def oracle_spectrum(H: PauliSum) -> Spectrum:
    """Full exact spectrum, memoized per Hamiltonian."""
    if H not in _SPECTRUM_CACHE:
        _SPECTRUM_CACHE[H] = exact_eigenpairs(H)
    return _SPECTRUM_CACHE[H]


def nearest_indices(values, reference) -> list[int]:
    """Index of the closest reference eigenvalue for each value."""
    reference = np.asarray(reference)
    return [int(np.argmin(np.abs(reference - v))) for v in values]


def greedy_reachable(spectrum: Spectrum, n_ancilla: int, k: int, tol: float = 1e-8) -> list[int]:
    """Walk up the spectrum, keeping eigenstates whose overlap rows add rank, until k are kept."""
    ov = overlap_matrix(spectrum, n_ancilla)
    scale = np.linalg.norm(ov[: max(k, 1)], 2) or 1.0
    kept: list[int] = []
    for i in range(len(spectrum)):
        rows = ov[kept + [i]]
        s = np.linalg.svd(rows, compute_uv=False)
        if np.sum(s > tol * scale) == len(kept) + 1:
            kept.append(i)
            if len(kept) == min(k, 1 << n_ancilla):
                break
    return kept


@dataclass
class RunRecord:
    config: ExperimentConfig
    result: OptimizeResult
    subspace: SubspaceResult
    exact: np.ndarray | None

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.subspace.eigenvalues[: self.config.n_targets]

    @property
    def errors(self) -> np.ndarray | None:
        if self.exact is None:
            return None
        return self.eigenvalues - self.exact[: self.config.n_targets]

    def summary(self) -> dict:
        r = self.result
        errs = self.errors
        out = {
            "best_restart": r.best_restart,
            "iterations_recorded": len(r.trace),
            "final_loss": r.trace.loss[-1],
            "final_state_energies": [float(x) for x in r.trace.energies[-1]],
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "exact_eigenvalues": None if self.exact is None else [float(x) for x in self.exact[: len(self.eigenvalues)]],
            "errors": None if errs is None else [float(x) for x in errs],
            "max_abs_error": None if errs is None else float(np.max(np.abs(errs))),
            "gap_error": None if errs is None or len(errs) < 2 else float(errs[1] - errs[0]),
            "restarts": [s.to_dict() for s in r.summaries],
            "theta": [float(x) for x in r.theta],
        }
        return out


def execute(cfg: ExperimentConfig) -> RunRecord:
    """Optimize, measure the subspace matrix on the final state and compare with the oracle."""
    cfg.validate()
    H = hamiltonian(cfg)
    circ = circuit(cfg)
    t0 = time.perf_counter()
    result = optimize(cfg.optimizer, circ, H, cfg.ansatz.K)
    logger.info("optimization finished in %.1f s (best restart %d)", time.perf_counter() - t0, result.best_restart)
    psi = apply_ansatz(build_initial_state(cfg.model.n, cfg.ansatz.n_ancilla), circ, result.theta)
    sub = SubspaceResult.from_state(psi, H, cfg.ansatz.n_ancilla, cfg.subspace_mode, cfg.ansatz.K)
    exact = None
    if cfg.oracle:
        exact = oracle_spectrum(H).eigenvalues
        sub = sub.with_reference(exact)
    return RunRecord(cfg, result, sub, exact)


def write_record(record: RunRecord, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    record.result.trace.write_csv(out / "trace.csv")
    record.result.trace.write_ritz_csv(out / "trace_ritz.csv")
    record.subspace.write_json(out / "subspace.json")
    summary = record.summary()
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    with open(out / "config.json", "w") as fh:
        json.dump(record.config.to_dict(), fh, indent=2)
    return summary


def run(cfg: ExperimentConfig, out: Path) -> dict:
    return write_record(execute(cfg), Path(out))


def scan_layers(cfg: ExperimentConfig, layers: list[int], out: Path) -> list[list]:
    """One run per layer count; writes ``scan_layers.csv`` with columns L, dE_0..."""
    rows = []
    for L in layers:
        c = replace(cfg, ansatz=replace(cfg.ansatz, layers=L)).validate()
        s = run(c, Path(out) / f"L{L}")
        rows.append([L] + (s["errors"] or []))
        logger.info("L=%d max |dE| = %s", L, s["max_abs_error"])
    _write_rows(Path(out) / "scan_layers.csv", ["L"] + [f"dE_{i}" for i in range(cfg.n_targets)], rows)
    return rows


def scan_ancillas(cfg: ExperimentConfig, ancillas: list[int], out: Path, fill: bool = False) -> list[list]:
    """One run per ancilla count; ``fill`` sets K = 2**N_a for each run.

    Writes ``scan_ancillas.csv`` with columns N_a, K, rank, dE_0...
    """
    rows = []
    H = hamiltonian(cfg)
    for na in ancillas:
        K = (1 << na) if fill else cfg.ansatz.K
        targets = min(cfg.n_targets, K)
        c = replace(cfg, ansatz=replace(cfg.ansatz, n_ancilla=na, K=K, targets=targets)).validate()
        rank = overlap_rank(oracle_spectrum(H).lowest(targets), na) if cfg.oracle else ""
        s = run(c, Path(out) / f"Na{na}")
        errs = s["errors"] or []
        rows.append([na, K, rank] + errs + [""] * (cfg.n_targets - len(errs)))
    header = ["N_a", "K", "rank"] + [f"dE_{i}" for i in range(cfg.n_targets)]
    _write_rows(Path(out) / "scan_ancillas.csv", header, rows)
    return rows


def diagnose_rank(cfg: ExperimentConfig, out: Path | None = None, with_run: bool = True) -> dict:
    """Overlap rank of the lowest targets, reachable indices, and the converged mapping."""
    H = hamiltonian(cfg)
    spectrum = oracle_spectrum(H)
    na, k = cfg.ansatz.n_ancilla, cfg.n_targets
    report = {
        "n_ancilla": na,
        "targets": k,
        "rank": overlap_rank(spectrum.lowest(k), na),
        "reachable": greedy_reachable(spectrum, na, k),
    }
    report["missing"] = [i for i in range(k) if i not in report["reachable"]]
    if with_run:
        record = execute(cfg)
        if out is not None:
            write_record(record, Path(out))
        report["converged"] = [float(x) for x in record.eigenvalues]
        report["converged_indices"] = nearest_indices(record.eigenvalues, spectrum.eigenvalues)
    return report


def parse_observable(text: str, n: int) -> PauliSum:
    """``mx``/``mz`` (sum of S^x or S^z) or ``coef*LABEL`` terms joined by ``+``."""
    key = text.strip().lower()
    if key in ("mx", "mz"):
        axis = key[1].upper()
        return PauliSum(n, [(0.5, PauliString.from_sparse(n, {i: axis})) for i in range(n)])
    terms = []
    for part in text.replace(" ", "").split("+"):
        coeff, _, label = part.rpartition("*")
        if len(label) != n or set(label.upper()) - set("IXYZ"):
            raise ConfigError(f"observable term {part!r} needs a {n}-letter I/X/Y/Z label")
        terms.append((float(coeff) if coeff else 1.0, label))
    return PauliSum(n, terms)


def thermal(out: Path, observable: str, beta: float) -> dict:
    """Thermal average from a finished run, by the ancilla route and by the ensemble sum."""
    if beta < 0:
        raise ConfigError(f"beta must be >= 0 (got {beta})")
    out = Path(out)
    try:
        cfg = ExperimentConfig.from_dict(json.loads((out / "config.json").read_text()))
        summary = json.loads((out / "summary.json").read_text())
        sub = SubspaceResult.read_json(out / "subspace.json")
    except FileNotFoundError as exc:
        raise ConfigError(f"missing run artifact {exc.filename}; run 'ancilla-vqe run' first") from None
    circ = circuit(cfg)
    psi = apply_ansatz(build_initial_state(cfg.model.n, cfg.ansatz.n_ancilla), circ, np.array(summary["theta"]))
    O = parse_observable(observable, cfg.model.n)
    a = thermal_expectation(psi, O, sub.eigenvalues, sub.S, beta)
    b = classical_thermal_average(psi, O, sub.eigenvalues, sub.S, beta)
    return {"beta": beta, "ancilla": a, "ensemble": b, "difference": a - b}


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


# --- argument handling --------------------------------------------------------


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment JSON file (defaults apply when omitted)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="parallel restarts (default: available cores)")
    common.add_argument("--output", type=Path, help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("--mode", choices=MODES, help="subspace diagonalization mode")
    common.add_argument("--grad", choices=("shift", "adjoint"), help="gradient evaluation")
    common.add_argument("--layers", type=int)
    common.add_argument("--iterations", type=int)
    common.add_argument("--restarts", type=int)
    common.add_argument("--algorithm", choices=("lbfgs", "adam", "gd"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ancilla-vqe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="optimize one configuration")
    s = sub.add_parser("scan-layers", parents=[common], help="error versus layer count")
    s.add_argument("--layer-list", type=_int_list, default=list(range(1, 9)), help="e.g. 1-8 or 2,4,6")
    s = sub.add_parser("scan-ancillas", parents=[common], help="error and rank versus ancilla count")
    s.add_argument("--ancilla-list", type=_int_list, default=[2, 3, 4])
    s.add_argument("--fill", action="store_true", help="use K = 2**N_a in every run")
    s = sub.add_parser("diagnose-rank", parents=[common], help="overlap rank and reachable eigenstates")
    s.add_argument("--no-run", action="store_true", help="skip the optimization")
    s = sub.add_parser("thermal", parents=[common], help="thermal average from a finished run")
    s.add_argument("--observable", default="mx", help="mx, mz, or terms like 0.5*XIIIIIII+0.5*IXIIIIII")
    s.add_argument("--beta", type=float, required=True)
    s = sub.add_parser("ed", parents=[common], help="dump the exact spectrum")
    s.add_argument("-k", type=int, default=16, help="number of levels")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    opt = {}
    for flag, key in (("seed", "seed"), ("iterations", "iterations"), ("restarts", "restarts"), ("algorithm", "algorithm")):
        if getattr(args, flag) is not None:
            opt[key] = getattr(args, flag)
    if args.grad is not None:
        opt["gradient_mode"] = "parameter-shift" if args.grad == "shift" else "adjoint"
    opt["threads"] = args.threads if args.threads is not None else (os.cpu_count() or 1)
    try:
        cfg.optimizer = replace(cfg.optimizer, **opt)
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    if args.layers is not None:
        cfg.ansatz = replace(cfg.ansatz, layers=args.layers)
    if args.mode is not None:
        cfg.subspace_mode = args.mode
    if args.output is not None:
        cfg.output_dir = str(args.output)
    elif cfg.output_dir is None:
        cfg.output_dir = os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output_dir)
        if args.command == "run":
            s = run(cfg, out)
            print(f"eigenvalues: {' '.join(f'{e:.10f}' for e in s['eigenvalues'])}")
            if s["errors"] is not None:
                print(f"errors:      {' '.join(f'{e:.3e}' for e in s['errors'])}")
            print(f"wrote {out}")
        elif args.command == "scan-layers":
            for row in scan_layers(cfg, args.layer_list, out):
                print(row[0], " ".join(f"{e:.3e}" for e in row[1:]))
        elif args.command == "scan-ancillas":
            for row in scan_ancillas(cfg, args.ancilla_list, out, args.fill):
                print(" ".join(str(x) if not isinstance(x, float) else f"{x:.3e}" for x in row))
        elif args.command == "diagnose-rank":
            report = diagnose_rank(cfg, out, with_run=not args.no_run)
            print(json.dumps(report, indent=2))
        elif args.command == "thermal":
            r = thermal(out, args.observable, args.beta)
            print(f"ancilla route:  {r['ancilla']:.12f}")
            print(f"ensemble sum:   {r['ensemble']:.12f}")
            print(f"difference:     {r['difference']:.3e}")
        elif args.command == "ed":
            spectrum = oracle_spectrum(hamiltonian(cfg))
            out.mkdir(parents=True, exist_ok=True)
            k = min(args.k, len(spectrum))
            write_spectrum_csv(out / "spectrum.csv", spectrum.eigenvalues[:k])
            for i, e in enumerate(spectrum.eigenvalues[:k]):
                print(i, f"{e:.12f}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
