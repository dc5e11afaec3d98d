"""Dense statevector with named registers and functional gate application.

Qubit 0 is the leftmost character of rendered bitstrings and the most significant
bit of the amplitude index. Registers are contiguous qubit ranges.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from . import _kernels as kern
from .errors import EncodingError, ProjectionError, WidthMismatchError
from .lattice import BasisLabel, EncodingLayout, encode_basis

__all__ = [
    "StateVector",
    "GateOp",
    "init_basis_state",
    "apply_gate",
    "apply_gates",
    "apply_pauli_string",
    "apply_controlled",
    "apply_shifted_qft",
    "shifted_qft_matrix",
    "pauli_masks",
    "measure_block",
    "project_and_renormalize",
    "marginal_probabilities",
    "ry_matrix",
    "dump_csv",
]

Block = str | tuple[int, int]


class StateVector:
    """Complex amplitudes over an ordered list of named registers."""

    def __init__(self, amplitudes: np.ndarray, registers: Sequence[tuple[str, int]]):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        self.registers: dict[str, tuple[int, int]] = {}
        start = 0
        for name, width in registers:
            self.registers[name] = (start, int(width))
            start += int(width)
        self.n_qubits = start
        if amps.shape != (1 << start,):
            raise WidthMismatchError(f"{amps.shape[0]} amplitudes for {start} qubits")
        self.amplitudes = amps

    @classmethod
    def zeros(cls, registers: Sequence[tuple[str, int]]) -> "StateVector":
        n = sum(w for _, w in registers)
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, registers)

    @classmethod
    def from_system(cls, system: np.ndarray, registers: Sequence[tuple[str, int]]) -> "StateVector":
        """Ancilla registers in |0>, trailing register holding ``system``."""
        n = sum(w for _, w in registers)
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[: system.shape[0]] = system
        return cls(amps, registers)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), [(k, w) for k, (_, w) in self.registers.items()])

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def block(self, block: Block) -> tuple[int, int]:
        if isinstance(block, str):
            try:
                return self.registers[block]
            except KeyError:
                raise WidthMismatchError(f"no register named {block!r}") from None
        start, width = block
        if start < 0 or width < 0 or start + width > self.n_qubits:
            raise WidthMismatchError(f"block {block} outside {self.n_qubits} qubits")
        return int(start), int(width)

    def qubits(self, block: Block) -> list[int]:
        start, width = self.block(block)
        return list(range(start, start + width))

    def bitpos(self, qubit: int) -> int:
        return self.n_qubits - 1 - qubit

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        regs = ", ".join(f"{k}:{w}" for k, (_, w) in self.registers.items())
        return f"StateVector({regs}; {self.n_qubits} qubits)"


def init_basis_state(layout: EncodingLayout, label: BasisLabel, name: str = "sys") -> StateVector:
    bits = encode_basis(label, layout)
    amps = np.zeros(layout.dimension, dtype=np.complex128)
    amps[int(bits, 2) if bits else 0] = 1.0
    return StateVector(amps, [(name, layout.n_qubits)])


# --------------------------------------------------------------------------
# Gate description
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GateOp:
    """One functional gate.

    kind: ``pauli`` (params: string, phase), ``ry`` (theta), ``phase`` (phi; diag(1, e^{i phi})),
    ``unitary`` (matrix), ``shifted_qft`` (n_perp, inverse), ``householder`` (u),
    ``reflection`` (1 - 2|0><0| on targets).
    ``controls`` is a tuple of (qubit, required bit).
    """

    kind: str
    targets: tuple[int, ...]
    params: dict = field(default_factory=dict)
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        tq = set(self.targets)
        if len(tq) != len(self.targets):
            raise WidthMismatchError(f"repeated target qubits {self.targets}")
        cq = {q for q, _ in self.controls}
        if tq & cq:
            raise WidthMismatchError(f"controls {sorted(cq)} overlap targets {sorted(tq)}")
        for k, v in self.params.items():
            if isinstance(v, (float, complex)) and not np.isfinite(v):
                raise ValueError(f"non-finite parameter {k}")

    def matrix(self) -> np.ndarray:
        """Dense matrix on the targets (controls excluded)."""
        k = self.kind
        p = self.params
        if k == "pauli":
            from .hamiltonian import pauli_matrix

            return p.get("phase", 1.0) * pauli_matrix(p["string"])
        if k == "ry":
            return ry_matrix(p["theta"])
        if k == "phase":
            return np.diag([1.0, np.exp(1j * p["phi"])])
        if k == "unitary":
            return np.asarray(p["matrix"], dtype=complex)
        if k == "shifted_qft":
            return shifted_qft_matrix(p["n_perp"], inverse=p.get("inverse", False))
        if k == "householder":
            u = np.asarray(p["u"], dtype=float)
            return np.eye(u.size) - 2 * np.outer(u, u)
        if k == "reflection":
            m = np.eye(1 << len(self.targets), dtype=complex)
            m[0, 0] = -1
            return m
        raise ValueError(f"unknown gate kind {k!r}")

    def dagger(self) -> "GateOp":
        k, p = self.kind, dict(self.params)
        if k == "pauli":
            p["phase"] = np.conj(p.get("phase", 1.0))
        elif k == "ry":
            p["theta"] = -p["theta"]
        elif k == "phase":
            p["phi"] = -p["phi"]
        elif k == "unitary":
            p["matrix"] = np.asarray(p["matrix"]).conj().T
        elif k == "shifted_qft":
            p["inverse"] = not p.get("inverse", False)
        return GateOp(k, self.targets, p, self.controls)

    def controlled(self, controls: Iterable[tuple[int, int]]) -> "GateOp":
        return GateOp(self.kind, self.targets, self.params, tuple(self.controls) + tuple(controls))


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def shifted_qft_matrix(n_perp: int, inverse: bool = False) -> np.ndarray:
    """F[n, q] = exp(+i 2 pi q n / 2N) / sqrt(2N) with q, n in [-N, N-1] in code order.

    Maps transverse momentum amplitudes to coordinate amplitudes; codes beyond 2N
    (when 2N is not a power of two) are left untouched.
    """
    m = 2 * n_perp
    width = (m - 1).bit_length()
    sites = np.arange(-n_perp, n_perp)
    f = np.eye(1 << width, dtype=complex)
    f[:m, :m] = np.exp(2j * np.pi * np.outer(sites, sites) / m) / math.sqrt(m)
    return f.conj().T if inverse else f


def pauli_masks(string: str) -> tuple[int, int, complex]:
    """(x_mask, z_mask, i^{#Y}) so that P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>."""
    n = len(string)
    x = z = 0
    ny = 0
    for i, c in enumerate(string):
        bit = 1 << (n - 1 - i)
        if c in "XY":
            x |= bit
        if c in "ZY":
            z |= bit
        if c == "Y":
            ny += 1
    return x, z, 1j**ny


def _offsets(state: StateVector, targets: Sequence[int]) -> tuple[np.ndarray, int]:
    t = len(targets)
    pos = [state.bitpos(q) for q in targets]
    offs = np.zeros(1 << t, dtype=np.int64)
    for j in range(1 << t):
        o = 0
        for i in range(t):
            if (j >> (t - 1 - i)) & 1:
                o |= 1 << pos[i]
        offs[j] = o
    tmask = 0
    for p in pos:
        tmask |= 1 << p
    return offs, tmask


def _control_masks(state: StateVector, controls: Iterable[tuple[int, int]]) -> tuple[int, int]:
    cmask = cval = 0
    for q, b in controls:
        if not 0 <= q < state.n_qubits:
            raise WidthMismatchError(f"control qubit {q} outside register")
        bit = 1 << state.bitpos(q)
        cmask |= bit
        if b:
            cval |= bit
    return cmask, cval


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    for q in op.targets:
        if not 0 <= q < state.n_qubits:
            raise WidthMismatchError(f"target qubit {q} outside {state.n_qubits}-qubit state")
    cmask, cval = _control_masks(state, op.controls)
    psi = state.amplitudes
    if op.kind == "pauli":
        string = op.params["string"]
        if len(string) != len(op.targets):
            raise WidthMismatchError(f"string {string!r} on {len(op.targets)} targets")
        x = z = 0
        ny = 0
        for q, c in zip(op.targets, string):
            bit = 1 << state.bitpos(q)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            ny += c == "Y"
        kern.apply_pauli(psi, x, z, complex(op.params.get("phase", 1.0) * 1j**ny), cmask, cval)
    elif op.kind == "reflection":
        _, tmask = _offsets(state, op.targets)
        kern.phase_on_mask(psi, tmask | cmask, cval, -1.0 + 0j)
    elif op.kind == "phase":
        _, tmask = _offsets(state, op.targets)
        kern.phase_on_mask(psi, tmask | cmask, tmask | cval, complex(np.exp(1j * op.params["phi"])))
    elif op.kind == "householder" and not op.controls:
        offs, tmask = _offsets(state, op.targets)
        kern.householder(psi, offs, tmask, np.asarray(op.params["u"], dtype=np.float64))
    else:
        offs, tmask = _offsets(state, op.targets)
        mat = np.ascontiguousarray(op.matrix(), dtype=np.complex128)
        if mat.shape != (offs.size, offs.size):
            raise WidthMismatchError(f"{mat.shape} matrix on {len(op.targets)} targets")
        kern.apply_matrix(psi, offs, tmask, mat, cmask, cval)
    return state


def apply_gates(state: StateVector, ops: Iterable[GateOp]) -> StateVector:
    for op in ops:
        apply_gate(state, op)
    return state


def apply_pauli_string(state: StateVector, string: str, phase: complex = 1.0, block: Block | None = None) -> StateVector:
    """Apply phase * (tensor product in ``string``) to ``block`` (default: last register)."""
    if block is None:
        block = list(state.registers)[-1]
    qubits = state.qubits(block)
    if len(string) != len(qubits):
        raise WidthMismatchError(f"string of width {len(string)} on a {len(qubits)}-qubit block")
    return apply_gate(state, GateOp("pauli", tuple(qubits), {"string": string, "phase": phase}))


def apply_controlled(state: StateVector, controls: Mapping[int, int] | Iterable[tuple[int, int]], op: GateOp) -> StateVector:
    ctl = tuple(controls.items()) if isinstance(controls, Mapping) else tuple(controls)
    return apply_gate(state, op.controlled(ctl))


def apply_shifted_qft(state: StateVector, block: Block, n_perp: int, inverse: bool = False) -> StateVector:
    qubits = state.qubits(block)
    expected = (2 * n_perp - 1).bit_length()
    if len(qubits) != expected:
        raise WidthMismatchError(f"QFT block has {len(qubits)} qubits, N_perp={n_perp} needs {expected}")
    return apply_gate(state, GateOp("shifted_qft", tuple(qubits), {"n_perp": n_perp, "inverse": inverse}))


@njit(cache=True)
def _marginal(psi, shift, mask, out):
    for i in range(psi.shape[0]):
        a = psi[i]
        out[(i >> shift) & mask] += a.real * a.real + a.imag * a.imag


@njit(cache=True)
def _project(psi, mask, value):
    p = 0.0
    for i in range(psi.shape[0]):
        if (i & mask) == value:
            a = psi[i]
            p += a.real * a.real + a.imag * a.imag
        else:
            psi[i] = 0.0
    return p


def marginal_probabilities(state: StateVector, block: Block) -> np.ndarray:
    start, width = state.block(block)
    out = np.zeros(1 << width)
    _marginal(state.amplitudes, state.n_qubits - start - width, (1 << width) - 1, out)
    return out


def measure_block(state: StateVector, block: Block, shots: int, rng: np.random.Generator | None = None) -> dict[str, int]:
    """Multinomial sample of the block's marginal; returns {bitstring: count} for observed outcomes."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng() if rng is None else rng
    start, width = state.block(block)
    probs = marginal_probabilities(state, block)
    probs = np.clip(probs, 0.0, None)
    counts = rng.multinomial(shots, probs / probs.sum())
    return {format(i, f"0{width}b") if width else "": int(c) for i, c in enumerate(counts) if c}


def project_and_renormalize(state: StateVector, block: Block, bits: str | int = 0, tol: float = 1e-12) -> tuple[StateVector, float]:
    """Zero amplitudes whose block differs from ``bits``; return (state, pre-projection probability)."""
    start, width = state.block(block)
    value = int(bits, 2) if isinstance(bits, str) else int(bits)
    if isinstance(bits, str) and len(bits) != width:
        raise EncodingError(f"{len(bits)} bits for a {width}-qubit block")
    shift = state.n_qubits - start - width
    mask = ((1 << width) - 1) << shift
    p = float(_project(state.amplitudes, mask, value << shift))
    if p < tol:
        raise ProjectionError(f"projection probability {p:.3e} below {tol:.1e}")
    state.amplitudes *= 1.0 / math.sqrt(p)
    return state, p


def dump_csv(state: StateVector, path: str | Path, threshold: float = 0.0) -> None:
    """Write ``index, re, im`` rows for amplitudes with |a| > threshold."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i in np.flatnonzero(np.abs(state.amplitudes) > threshold):
            a = state.amplitudes[i]
            w.writerow([int(i), f"{a.real:.12g}", f"{a.imag:.12g}"])
