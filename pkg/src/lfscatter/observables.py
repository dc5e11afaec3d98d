"""Trajectories of system-register probabilities and the physics read off them.

Every observable is computed from probabilities, so statevector and shot-sampled
trajectories share one code path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, EncodingError
from .lattice import BasisLabel, Color, EncodingLayout, LatticeSpec, encode_basis

__all__ = [
    "TrajectoryStep",
    "Trajectory",
    "transition_probability",
    "transverse_marginal",
    "p_perp_squared_expectation",
    "color_marginal",
    "relative_deviation",
    "observables_table",
    "write_observables_csv",
    "write_probabilities_csv",
    "read_observables_csv",
    "OBSERVABLE_COLUMNS",
]

OBSERVABLE_COLUMNS = ("step", "x_plus", "p_perp_sq", "P_red", "P_green", "P_blue")


@dataclass
class TrajectoryStep:
    step: int
    x_plus: float
    probabilities: np.ndarray
    amplitudes: np.ndarray | None = None
    ancilla_success: float | None = None
    shots: int | None = None


@dataclass
class Trajectory:
    """Per-step system distributions for one engine run (step 0 is the initial state)."""

    layout: EncodingLayout | None
    steps: list[TrajectoryStep] = field(default_factory=list)
    engine: str = ""

    def _require_layout(self) -> EncodingLayout:
        if self.layout is None:
            raise ConfigurationError("trajectory has no register layout")
        return self.layout

    def record(self, step: int, x_plus: float, amplitudes: np.ndarray | None = None,
               probabilities: np.ndarray | None = None, ancilla_success: float | None = None,
               shots: int | None = None) -> TrajectoryStep:
        if probabilities is None:
            if amplitudes is None:
                raise ConfigurationError("a step needs amplitudes or probabilities")
            probabilities = np.abs(amplitudes) ** 2
        probs = np.asarray(probabilities, dtype=float)
        expected = self.layout.dimension if self.layout is not None else (
            self.steps[0].probabilities.size if self.steps else probs.size)
        if probs.shape != (expected,):
            raise EncodingError(f"{probs.size} probabilities for a {expected}-state basis")
        amps = None if amplitudes is None else np.array(amplitudes, dtype=complex)
        entry = TrajectoryStep(int(step), float(x_plus), probs, amps, ancilla_success, shots)
        self.steps.append(entry)
        return entry

    def __len__(self):
        return len(self.steps)

    @property
    def x_plus(self) -> np.ndarray:
        return np.array([s.x_plus for s in self.steps])

    @property
    def probabilities(self) -> np.ndarray:
        """Array of shape (steps, 2^n)."""
        if not self.steps:
            return np.zeros((0, self._require_layout().dimension))
        return np.stack([s.probabilities for s in self.steps])

    @property
    def amplitudes(self) -> np.ndarray:
        if any(s.amplitudes is None for s in self.steps):
            raise ConfigurationError("trajectory was recorded without amplitudes")
        return np.stack([s.amplitudes for s in self.steps])

    @property
    def ancilla_success(self) -> list[float | None]:
        return [s.ancilla_success for s in self.steps]

    @property
    def final(self) -> TrajectoryStep:
        return self.steps[-1]


def transition_probability(traj: Trajectory, label: BasisLabel) -> np.ndarray:
    """|<label|psi(x+)>|^2 at every recorded step."""
    index = int(encode_basis(label, traj._require_layout()) or "0", 2)
    return traj.probabilities[:, index]


def _grid(traj: Trajectory) -> tuple[np.ndarray, tuple[str, ...]]:
    """Probabilities reshaped to one axis per register block."""
    layout = traj._require_layout()
    names = tuple(n for n, w in layout.widths.items() if w)
    shape = (len(traj.steps),) + tuple(1 << layout.widths[n] for n in names)
    return traj.probabilities.reshape(shape), names


def transverse_marginal(traj: Trajectory) -> np.ndarray:
    """P(q1, q2) per step, shape (steps, 2N, 2N) in code order; unused codes are dropped."""
    probs, names = _grid(traj)
    keep = tuple(i + 1 for i, n in enumerate(names) if n in ("p1", "p2"))
    drop = tuple(i for i in range(1, probs.ndim) if i not in keep)
    marg = probs.sum(axis=drop)
    n = 2 * traj._require_layout().N_perp
    return marg[:, :n, :n]


def p_perp_squared_expectation(traj: Trajectory, spec: LatticeSpec) -> np.ndarray:
    """<p1^2 + p2^2> in GeV^2 per step, other labels traced out."""
    if spec.N_perp != traj._require_layout().N_perp:
        raise ConfigurationError("lattice and trajectory layout disagree on N_perp")
    p = np.arange(-spec.N_perp, spec.N_perp) * spec.a_p_perp
    psq = p[:, None] ** 2 + p[None, :] ** 2
    return np.einsum("sij,ij->s", transverse_marginal(traj), psq)


def color_marginal(traj: Trajectory) -> np.ndarray:
    """Columns (P_red, P_green, P_blue) per step; mass on the unused code 11 is not reported."""
    probs, names = _grid(traj)
    axis = names.index("color") + 1
    drop = tuple(i for i in range(1, probs.ndim) if i != axis)
    return probs.sum(axis=drop)[:, : len(Color)]


def relative_deviation(sim: Iterable[float], exact: Iterable[float], floor: float = 0.0
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise |sim - exact| / |exact|.

    Points with |exact| <= floor are skipped: their deviation is NaN and the
    returned mask is False there.
    """
    s = np.asarray(list(sim) if not isinstance(sim, np.ndarray) else sim, dtype=float)
    e = np.asarray(list(exact) if not isinstance(exact, np.ndarray) else exact, dtype=float)
    if s.shape != e.shape:
        raise ConfigurationError(f"series shapes differ: {s.shape} vs {e.shape}")
    valid = np.abs(e) > floor
    dev = np.full(s.shape, np.nan)
    dev[valid] = np.abs(s[valid] - e[valid]) / np.abs(e[valid])
    return dev, valid


def observables_table(traj: Trajectory, spec: LatticeSpec) -> np.ndarray:
    """Rows of (step, x_plus, p_perp_sq, P_red, P_green, P_blue)."""
    steps = np.array([s.step for s in traj.steps], dtype=float)
    return np.column_stack([steps, traj.x_plus, p_perp_squared_expectation(traj, spec), color_marginal(traj)])


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_observables_csv(traj: Trajectory, spec: LatticeSpec, path: str | Path) -> None:
    table = observables_table(traj, spec)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OBSERVABLE_COLUMNS)
        for row in table:
            w.writerow([int(row[0])] + [_fmt(v) for v in row[1:]])


def write_probabilities_csv(traj: Trajectory, path: str | Path) -> None:
    width = int(traj.steps[0].probabilities.size).bit_length() - 1 if traj.steps else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "x_plus", "bitstring", "probability"])
        for s in traj.steps:
            for i, p in enumerate(s.probabilities):
                w.writerow([s.step, _fmt(s.x_plus), format(i, f"0{width}b"), _fmt(p)])


def read_observables_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(OBSERVABLE_COLUMNS) - set(rows[0]):
        raise ConfigurationError(f"{path} lacks observable columns")
    return {c: np.array([float(r[c]) for r in rows]) for c in OBSERVABLE_COLUMNS}
