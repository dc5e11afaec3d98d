"""Command-line runner: config -> Hamiltonian -> engine -> observables -> files.

    lfscatter run --config demo.yaml --algorithm tts --K 3 --steps 25 --out runs/tts
    lfscatter compare runs/tts runs/exact --out runs/tts_vs_exact
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .cgc import FieldParams, generate_field
from .errors import ConfigurationError, LFScatterError
from .hamiltonian import HamiltonianModel, assemble, build_interaction, demo_fixture, demo_lattice, kinetic_terms, resource_estimate
from .lattice import BasisLabel, EncodingLayout, LatticeSpec, build_lattice, encode_basis
from .observables import (
    OBSERVABLE_COLUMNS,
    Trajectory,
    read_observables_csv,
    relative_deviation,
    write_observables_csv,
    write_probabilities_csv,
)

__all__ = ["RunConfig", "load_config", "build_problem", "run", "compare", "main"]

log = logging.getLogger("lfscatter")

ALGORITHMS = ("tts", "trotter", "exact", "tts-matrix")
MODES = ("statevector", "shots")


@dataclass
class LatticeConfig:
    N_perp: int = 2
    L_perp: float = 5.0
    N_par: int = 1
    L_par: float = 1.0


@dataclass
class PhysicsConfig:
    m_quark: float = 0.02
    p_plus: float = 850.0
    helicity: float = 0.5
    g: float = 1.0
    g2mu: float = 0.407294
    m_g: float = 0.1
    L_eta: float = 50.0
    N_eta: int = 1
    colors: list[int] | None = None


@dataclass
class EngineConfig:
    algorithm: str = "exact"
    K_r: int = 3
    steps: int = 25
    tau_prime: float | None = None
    trotter_substeps: int = 1
    shots: int = 0
    mode: str = "statevector"


@dataclass
class SourceConfig:
    field: str = "fixture"


@dataclass
class InitialConfig:
    q1: int = 0
    q2: int = 0
    color: str = "Red"


@dataclass
class RunConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    seed: int = 0
    out: str = "run"

    def validate(self) -> None:
        e = self.engine
        if e.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"algorithm must be one of {ALGORITHMS}, got {e.algorithm!r}")
        if e.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {e.mode!r}")
        if e.mode == "shots" and e.shots < 1:
            raise ConfigurationError("shot mode needs shots >= 1")
        if int(e.steps) != e.steps or e.steps < 0:
            raise ConfigurationError(f"steps must be a non-negative integer, got {e.steps}")
        if e.K_r < 1:
            raise ConfigurationError(f"K_r must be >= 1, got {e.K_r}")
        if e.trotter_substeps < 1:
            raise ConfigurationError("trotter_substeps must be >= 1")
        if self.source.field not in ("fixture", "sampled"):
            raise ConfigurationError(f"source.field must be 'fixture' or 'sampled', got {self.source.field!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "lattice": LatticeConfig,
    "physics": PhysicsConfig,
    "engine": EngineConfig,
    "source": SourceConfig,
    "initial": InitialConfig,
}


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    data = dict(data or {})
    kwargs: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        section = data.pop(name, None) or {}
        if not isinstance(section, dict):
            raise ConfigurationError(f"section {name!r} must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(section) - known
        if unknown:
            raise ConfigurationError(f"unknown keys in {name!r}: {sorted(unknown)}")
        kwargs[name] = cls(**section)
    for key in ("seed", "out"):
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ConfigurationError(f"unknown top-level keys: {sorted(data)}")
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


@dataclass
class Problem:
    spec: LatticeSpec
    layout: EncodingLayout
    model: HamiltonianModel
    initial: np.ndarray


def build_problem(cfg: RunConfig, rng: np.random.Generator | None = None) -> Problem:
    if cfg.source.field == "fixture":
        spec, layout = demo_lattice()
        model = demo_fixture()
    else:
        lat, phys = cfg.lattice, cfg.physics
        spec = build_lattice(lat.N_perp, lat.L_perp, lat.N_par, lat.L_par, phys.p_plus, phys.helicity)
        layout = EncodingLayout.for_lattice(spec, omit_p_plus=lat.N_par == 1, omit_helicity=True,
                                            fixed_helicity=phys.helicity)
        params = FieldParams(phys.g, phys.g2mu, phys.m_g, phys.L_eta, phys.N_eta, phys.m_quark, cfg.seed)
        rng = np.random.default_rng(cfg.seed) if rng is None else rng
        colour_field = generate_field(params, spec, rng)
        kin = kinetic_terms(spec, layout, phys.m_quark, phys.p_plus)
        inter = build_interaction(colour_field, spec, phys.g, layout, colors=phys.colors)
        model = assemble(kin, inter, layout)
        model.meta.update(source="sampled", layout=layout)
    label = BasisLabel(cfg.initial.q1, cfg.initial.q2, cfg.initial.color, layout.fixed_helicity, layout.fixed_q_plus)
    psi = np.zeros(layout.dimension, dtype=complex)
    psi[int(encode_basis(label, layout), 2)] = 1.0
    return Problem(spec, layout, model, psi)


def _sample(traj: Trajectory, shots: int, rng: np.random.Generator) -> Trajectory:
    """Replace each step's distribution by a multinomial histogram of ``shots`` draws."""
    out = Trajectory(traj.layout, engine=traj.engine)
    for s in traj.steps:
        p = np.clip(s.probabilities, 0.0, None)
        counts = rng.multinomial(shots, p / p.sum())
        out.record(s.step, s.x_plus, probabilities=counts / shots, ancilla_success=s.ancilla_success, shots=shots)
    return out


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run(cfg: RunConfig) -> dict:
    """Execute one run and write manifest.json, probabilities.csv and observables.csv under cfg.out."""
    from . import reference, trotter, tts

    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    problem = build_problem(cfg, rng)
    model, e = problem.model, cfg.engine
    lam = model.lambda_norm
    tau = tts.LN2 / lam if lam > 0 else 1.0
    manifest: dict[str, Any] = {
        "status": "running",
        "artifact_version": __version__,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "units": {"momentum": "GeV", "time": "GeV^-1", "energy": "GeV"},
        "lambda": lam,
        "tau": tau,
        "r": e.steps,
        "x_plus": e.steps * tau,
        "K_r": e.K_r if e.algorithm in ("tts", "tts-matrix") else None,
        "system_qubits": model.n_qubits,
        "term_order": [t.string for t in model.terms],
        "n_kinetic_terms": model.L1,
        "n_interaction_terms": model.L2,
    }
    if e.algorithm in ("tts", "tts-matrix") and model.L:
        res = resource_estimate(model, e.K_r, max(e.steps, 1))
        manifest.update(ancilla_qubits=res["ancilla_qubits"], total_qubits=res["total_qubits"])
    manifest_path = out / "manifest.json"
    _write_manifest(manifest_path, manifest)
    start = time.perf_counter()
    try:
        if e.algorithm == "tts":
            config = tts.TTSConfig(e.K_r, tau, e.steps)
            traj = tts.evolve(problem.initial, model, config, problem.layout, mode=e.mode, shots=e.shots, rng=rng)
        elif e.algorithm == "tts-matrix":
            traj = reference.tts_matrix_emulation(problem.initial, model, e.K_r, e.steps, tau, problem.layout)
        elif e.algorithm == "exact":
            traj = reference.exact_trajectory(problem.initial, model, tau, e.steps, problem.layout)
        else:
            tau_prime = e.tau_prime if e.tau_prime is not None else tau / e.trotter_substeps
            n_steps = e.steps * e.trotter_substeps if e.tau_prime is None else e.steps
            every = e.trotter_substeps if e.tau_prime is None else 1
            manifest["tau_prime"] = tau_prime
            traj = trotter.trotter_evolve(problem.initial, model, trotter.TrotterConfig(tau_prime, n_steps),
                                          problem.layout, record_every=every)
            for i, s in enumerate(traj.steps):
                s.step = i
        if e.mode == "shots" and e.algorithm != "tts":
            traj = _sample(traj, e.shots, rng)
    except LFScatterError as exc:
        manifest.update(status="failed", error=str(exc), wall_clock_s=time.perf_counter() - start)
        _write_manifest(manifest_path, manifest)
        raise
    write_probabilities_csv(traj, out / "probabilities.csv")
    write_observables_csv(traj, problem.spec, out / "observables.csv")
    manifest.update(
        status="complete",
        ancilla_success=[s.ancilla_success for s in traj.steps[1:]] if e.algorithm in ("tts", "tts-matrix") else None,
        shots_per_step=[s.shots for s in traj.steps] if e.mode == "shots" else None,
        wall_clock_s=time.perf_counter() - start,
    )
    _write_manifest(manifest_path, manifest)
    return manifest


DEVIATION_COLUMNS = ("p_perp_sq", "P_red", "P_green", "P_blue")


def compare(run_a: str | Path, run_b: str | Path, out: str | Path, floor: float = 1e-12) -> Path:
    """Per-step |a - b| / |b| of each observable; points where |b| <= floor are written as nan."""
    a = read_observables_csv(Path(run_a) / "observables.csv")
    b = read_observables_csv(Path(run_b) / "observables.csv")
    if a["x_plus"].shape != b["x_plus"].shape or not np.allclose(a["x_plus"], b["x_plus"], rtol=1e-9, atol=1e-12):
        raise ConfigurationError("runs are on different x+ grids")
    devs = {c: relative_deviation(a[c], b[c], floor)[0] for c in DEVIATION_COLUMNS}
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "deviations.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x_plus"] + [f"dev_{c}" for c in DEVIATION_COLUMNS])
        for i in range(a["step"].size):
            w.writerow([int(a["step"][i]), f"{a['x_plus'][i]:.12g}"] + [f"{devs[c][i]:.12g}" for c in DEVIATION_COLUMNS])
    return path


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    e = cfg.engine
    if args.algorithm is not None:
        e.algorithm = args.algorithm
    if args.K is not None:
        e.K_r = args.K
    if args.steps is not None:
        e.steps = args.steps
    if args.shots is not None:
        e.shots = args.shots
    if args.mode is not None:
        e.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


def _run_seed(payload: tuple[dict, int, str]) -> dict:
    data, seed, out = payload
    cfg = config_from_dict(data)
    cfg.seed, cfg.out = seed, out
    return run(cfg)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lfscatter", description="Quark-nucleus scattering evolution runs.")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command")
    r = sub.add_parser("run", help="evolve one configuration")
    r.add_argument("--config", type=Path)
    r.add_argument("--algorithm", choices=ALGORITHMS)
    r.add_argument("--K", type=int)
    r.add_argument("--steps", type=int)
    r.add_argument("--shots", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--out")
    r.add_argument("--sweep", type=int, default=0, help="run this many consecutive seeds concurrently")
    c = sub.add_parser("compare", help="relative deviations between two runs")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help", "--log-level"):
        argv.insert(0, "run")
    args = _parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
    try:
        if args.command == "compare":
            print(compare(args.run_a, args.run_b, args.out))
            return 0
        if args.command != "run":
            _parser().print_help()
            return 2
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        if args.sweep and args.sweep > 1:
            base = cfg.to_dict()
            jobs = [(base, cfg.seed + i, str(Path(cfg.out) / f"seed_{cfg.seed + i}")) for i in range(args.sweep)]
            with ProcessPoolExecutor() as pool:
                for manifest in pool.map(_run_seed, jobs):
                    print(f"seed {manifest['seed']}: {manifest['status']}")
            return 0
        manifest = run(cfg)
        print(f"{manifest['status']}: {cfg.out} ({manifest['wall_clock_s']:.2f} s)")
        return 0
    except LFScatterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
