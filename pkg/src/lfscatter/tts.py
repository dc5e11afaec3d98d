"""Truncated-Taylor-series evolution through an LCU block encoding.

Register order of the full circuit (most significant first)::

    [y0 (K qubits, unary) | y1 | ... | yK (ceil(log2 L) qubits each) | system]

The system register is least significant, so each ancilla configuration owns a
contiguous fiber of ``2^n_sys`` amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .errors import ConfigurationError, ProjectionError
from .hamiltonian import HamiltonianModel
from .lattice import EncodingLayout, bits_for
from .observables import Trajectory
from .statevector import GateOp, StateVector, apply_gate, apply_gates, pauli_masks, shifted_qft_matrix

__all__ = [
    "LN2",
    "TTSConfig",
    "TaylorWeights",
    "normalization_factor",
    "rotation_angles",
    "taylor_tail",
    "term_amplitudes",
    "prepare_operator",
    "SelectOperator",
    "select_operator",
    "WalkOperator",
    "walk_operator",
    "oaa_step",
    "evolve",
    "truncation_order_for",
]

LN2 = math.log(2.0)


def normalization_factor(K: int, lambda_tau: float) -> float:
    """N_K = sum_{k<=K} (Lambda tau)^k / k!."""
    if K < 0:
        raise ConfigurationError(f"K must be >= 0, got {K}")
    return float(sum(lambda_tau**k / math.factorial(k) for k in range(K + 1)))


def taylor_tail(K: int, lambda_tau: float = LN2, terms: int = 60) -> float:
    """sum_{k>K} (Lambda tau)^k / k!."""
    return float(sum(lambda_tau**k / math.factorial(k) for k in range(K + 1, K + 1 + terms)))


def rotation_angles(K: int, lambda_tau: float) -> np.ndarray:
    """theta_k, k = 1..K, loading the unary weights (Lambda tau)^k/k!/N_K onto y0."""
    w = [lambda_tau**q / math.factorial(q) for q in range(K + 1)]
    out = np.empty(K)
    for k in range(1, K + 1):
        tail = sum(w[k - 1:])
        # an empty tail means slot k is never reached; leave it in |0>
        ratio = w[k - 1] / tail if tail > 0 else 1.0
        out[k - 1] = 2.0 * math.asin(math.sqrt(max(0.0, 1.0 - ratio)))
    return out


@dataclass(frozen=True)
class TaylorWeights:
    K: int
    lambda_tau: float

    @property
    def normalization(self) -> float:
        return normalization_factor(self.K, self.lambda_tau)

    @property
    def order_weights(self) -> np.ndarray:
        """(Lambda tau)^k / k! for k = 0..K."""
        return np.array([self.lambda_tau**k / math.factorial(k) for k in range(self.K + 1)])

    @property
    def angles(self) -> np.ndarray:
        return rotation_angles(self.K, self.lambda_tau)

    def unary_probabilities(self) -> np.ndarray:
        return self.order_weights / self.normalization

    @property
    def amplified_amplitude(self) -> float:
        """3/N_K - 4/N_K^3, the success amplitude when U_K is unitary."""
        n = self.normalization
        return 3.0 / n - 4.0 / n**3


@dataclass(frozen=True)
class TTSConfig:
    """K: truncation order; tau: step in GeV^-1; r: number of steps."""

    K: int
    tau: float
    r: int = 1
    epsilon: float | None = None

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"truncation order must be an integer >= 1, got {self.K}")
        if isinstance(self.r, float) and not self.r.is_integer():
            raise ConfigurationError(f"step count must be an integer, got {self.r}")
        if int(self.r) != self.r or self.r < 0:
            raise ConfigurationError(f"step count must be a non-negative integer, got {self.r}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def for_model(cls, model: HamiltonianModel, K: int, r: int = 1, epsilon: float | None = None) -> "TTSConfig":
        """Step size tau = ln2 / Lambda, so that N_K stays near 2."""
        lam = model.lambda_norm
        tau = LN2 / lam if lam > 0 else 1.0
        return cls(K, tau, r, epsilon)

    @property
    def x_plus(self) -> float:
        return self.r * self.tau

    def weights(self, model: HamiltonianModel) -> TaylorWeights:
        return TaylorWeights(self.K, model.lambda_norm * self.tau)

    def registers(self, model: HamiltonianModel) -> list[tuple[str, int]]:
        m = bits_for(max(model.L, 1))
        return [("y0", self.K)] + [(f"y{k}", m) for k in range(1, self.K + 1)] + [("sys", model.n_qubits)]


def truncation_order_for(epsilon: float, lam: float, x_plus: float) -> int:
    """Smallest K with e^{ln2} (ln2)^{K+1}/(K+1)! < epsilon / r, where r = Lambda x+ / ln2."""
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    r = max(lam * x_plus / LN2, 1.0)
    K = 1
    while 2.0 * LN2 ** (K + 1) / math.factorial(K + 1) >= epsilon / r:
        K += 1
    return K


def term_amplitudes(magnitudes, width: int) -> np.ndarray:
    """sqrt(|c_l| / Lambda) padded to 2^width entries."""
    c = np.asarray(magnitudes, dtype=float)
    if np.any(c < 0):
        raise ConfigurationError("preparation weights must be non-negative; absorb signs into the unitaries")
    if c.size > (1 << width):
        raise ConfigurationError(f"{c.size} terms do not fit {width} index qubits")
    out = np.zeros(1 << width)
    total = c.sum()
    if total > 0:
        out[: c.size] = np.sqrt(c / total)
    else:
        out[0] = 1.0
    return out


def _householder_to(target: np.ndarray) -> np.ndarray | None:
    """Unit u with (1 - 2uu^T) e_0 = target; None when target is already e_0."""
    v = -np.array(target, dtype=float)
    v[0] += 1.0
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return None
    return v / nv


class _Registers:
    def __init__(self, model: HamiltonianModel, config: TTSConfig):
        self.regs = config.registers(model)
        self.K = config.K
        self.m = self.regs[1][1] if self.K else 0
        self.n_sys = model.n_qubits
        starts = np.cumsum([0] + [w for _, w in self.regs])
        self.start = {name: int(s) for (name, _), s in zip(self.regs, starts)}
        self.n_total = int(starts[-1])
        self.n_anc = self.n_total - self.n_sys

    def y0(self, k: int) -> int:
        """Qubit index of unary slot k (1-based)."""
        return self.start["y0"] + k - 1

    def yk(self, k: int) -> tuple[int, ...]:
        s = self.start[f"y{k}"]
        return tuple(range(s, s + self.m))

    def sys(self) -> tuple[int, ...]:
        s = self.start["sys"]
        return tuple(range(s, s + self.n_sys))

    def ancillas(self) -> tuple[int, ...]:
        return tuple(range(self.n_anc))


def prepare_operator(model: HamiltonianModel, config: TTSConfig) -> list[GateOp]:
    """Gates taking |0> on the ancillas to sum_j sqrt(eta_j / N_K) |j>.

    y0 gets an uncontrolled R_y(theta_1) then R_y(theta_k) on slot k controlled by
    slot k-1; each y_k gets a Householder reflection loading sqrt(|c_l| / Lambda).
    """
    regs = _Registers(model, config)
    weights = config.weights(model)
    ops: list[GateOp] = []
    for k, theta in enumerate(weights.angles, start=1):
        controls = () if k == 1 else ((regs.y0(k - 1), 1),)
        ops.append(GateOp("ry", (regs.y0(k),), {"theta": float(theta)}, controls))
    if regs.m:
        u = _householder_to(term_amplitudes([abs(t.coeff) for t in model.terms], regs.m))
        if u is not None:
            for k in range(1, config.K + 1):
                ops.append(GateOp("householder", regs.yk(k), {"u": u}))
    return ops


def _dagger_sequence(ops: list[GateOp]) -> list[GateOp]:
    return [op.dagger() for op in reversed(ops)]


class SelectOperator:
    """Controlled products of signed Pauli strings, with a fused kernel and a gate-level form."""

    def __init__(self, model: HamiltonianModel, config: TTSConfig):
        self.model = model
        self.config = config
        self.regs = _Registers(model, config)
        terms = model.terms
        n = model.n_qubits
        self.xmasks = np.zeros(len(terms), dtype=np.int64)
        self.zmasks = np.zeros(len(terms), dtype=np.int64)
        self.coeffs = np.zeros(len(terms), dtype=np.complex128)
        self.conj = np.zeros(len(terms), dtype=np.bool_)
        for i, t in enumerate(terms):
            x, z, ph = pauli_masks(t.string)
            self.xmasks[i], self.zmasks[i] = x, z
            self.coeffs[i] = ph * (1.0 if t.coeff >= 0 else -1.0)
            self.conj[i] = i >= model.L1
        blocks = model.qft_blocks if model.L2 else ()
        if blocks:
            w = blocks[0][1]
            self.qft_offsets = np.zeros((len(blocks), 1 << w), dtype=np.int64)
            self.qft_tmasks = np.zeros(len(blocks), dtype=np.int64)
            for b, (start, width) in enumerate(blocks):
                pos = [n - 1 - q for q in range(start, start + width)]
                for j in range(1 << width):
                    self.qft_offsets[b, j] = sum(1 << pos[i] for i in range(width) if (j >> (width - 1 - i)) & 1)
                self.qft_tmasks[b] = sum(1 << p for p in pos)
            self.qft_fwd = np.ascontiguousarray(shifted_qft_matrix(model.n_perp))
            self.qft_inv = np.ascontiguousarray(self.qft_fwd.conj().T)
        else:
            self.qft_offsets = np.zeros((0, 1), dtype=np.int64)
            self.qft_tmasks = np.zeros(0, dtype=np.int64)
            self.qft_fwd = np.eye(1, dtype=np.complex128)
            self.qft_inv = np.eye(1, dtype=np.complex128)
        K = config.K
        self.y0_shift = self.regs.n_total - self.regs.start["y0"] - K
        self.yk_shifts = np.array(
            [self.regs.n_total - self.regs.start[f"y{k}"] - self.regs.m for k in range(1, K + 1)], dtype=np.int64
        )

    def term_string(self, ell: int) -> tuple[str, float]:
        if not 0 <= ell < self.model.L:
            raise ConfigurationError(f"term index {ell} outside [0, {self.model.L})")
        t = self.model.terms[ell]
        return t.string, (1.0 if t.coeff >= 0 else -1.0)

    def apply(self, state: StateVector, adjoint: bool = False) -> StateVector:
        kern.select(state.amplitudes, self.regs.n_sys, self.config.K, self.y0_shift, self.yk_shifts,
                    self.regs.m, self.xmasks, self.zmasks, self.coeffs, self.conj, self.qft_offsets,
                    self.qft_tmasks, self.qft_fwd, self.qft_inv, adjoint)
        return state

    def gates(self) -> list[GateOp]:
        """Gate-level form: per slot an S-dagger phase, then multi-controlled strings.

        Interaction strings sit between an uncontrolled F and F^dag on the
        transverse blocks; those cancel wherever no string fires.
        """
        regs = self.regs
        model = self.model
        sys = regs.sys()
        ops: list[GateOp] = []
        qft = [tuple(sys[s:s + w]) for s, w in model.qft_blocks] if model.L2 else []
        for k in range(1, self.config.K + 1):
            slot = regs.y0(k)
            ops.append(GateOp("phase", (slot,), {"phi": -math.pi / 2}))
            for ell in range(model.L):
                if ell == model.L1:
                    ops += [GateOp("shifted_qft", b, {"n_perp": model.n_perp}) for b in qft]
                string, sign = self.term_string(ell)
                index_bits = tuple((q, (ell >> (regs.m - 1 - i)) & 1) for i, q in enumerate(regs.yk(k)))
                ops.append(GateOp("pauli", sys, {"string": string, "phase": sign}, ((slot, 1),) + index_bits))
            if model.L2:
                ops += [GateOp("shifted_qft", b, {"n_perp": model.n_perp, "inverse": True}) for b in qft]
        return ops


def select_operator(model: HamiltonianModel, config: TTSConfig) -> SelectOperator:
    return SelectOperator(model, config)


class WalkOperator:
    """W = P^dag S P and the amplification Q = -W R W^dag R, R = 1 - 2|0><0| on the ancillas."""

    def __init__(self, model: HamiltonianModel, config: TTSConfig):
        self.model = model
        self.config = config
        self.prepare = prepare_operator(model, config)
        self.unprepare = _dagger_sequence(self.prepare)
        self.select = SelectOperator(model, config)
        self.regs = self.select.regs
        self.weights = config.weights(model)

    def new_state(self, system: np.ndarray) -> StateVector:
        return StateVector.from_system(np.asarray(system, dtype=np.complex128), self.config.registers(self.model))

    def apply(self, state: StateVector, adjoint: bool = False) -> StateVector:
        apply_gates(state, self.prepare)
        self.select.apply(state, adjoint=adjoint)
        apply_gates(state, self.unprepare)
        return state

    def reflect(self, state: StateVector) -> StateVector:
        dim = 1 << self.regs.n_sys
        state.amplitudes[:dim] *= -1.0
        return state

    def amplify(self, state: StateVector) -> StateVector:
        """Q W applied to ``state``."""
        self.apply(state)
        self.reflect(state)
        self.apply(state, adjoint=True)
        self.reflect(state)
        self.apply(state)
        state.amplitudes *= -1.0
        return state

    def gates(self) -> list[GateOp]:
        return self.prepare + self.select.gates() + self.unprepare

    def reflection_gate(self) -> GateOp:
        return GateOp("reflection", self.regs.ancillas())

    def block(self) -> np.ndarray:
        """Dense <0|W|0> on the system, column by column (small models only)."""
        dim = 1 << self.regs.n_sys
        out = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[col] = 1.0
            state = self.apply(self.new_state(e))
            out[:, col] = state.amplitudes[:dim]
        return out


def walk_operator(model: HamiltonianModel, config: TTSConfig) -> WalkOperator:
    return WalkOperator(model, config)


@dataclass
class StepOutcome:
    success_probability: float


def oaa_step(state: StateVector, walk: WalkOperator, min_success: float = 1e-12) -> tuple[StateVector, StepOutcome]:
    """One amplified step: Q W, then deterministic projection of the ancillas on |0>.

    ``state`` must have its ancillas in |0>; it is updated in place and left with
    ancillas reset and the system renormalized.
    """
    dim = 1 << walk.regs.n_sys
    walk.amplify(state)
    psi = state.amplitudes
    p = float(np.vdot(psi[:dim], psi[:dim]).real)
    if p < min_success:
        raise ProjectionError(f"ancilla postselection probability {p:.3e}")
    psi[dim:] = 0.0
    psi[:dim] *= 1.0 / math.sqrt(p)
    return state, StepOutcome(p)


def evolve(initial: np.ndarray | StateVector, model: HamiltonianModel, config: TTSConfig,
           layout: EncodingLayout | None = None, mode: str = "statevector", shots: int = 0,
           rng: np.random.Generator | None = None) -> Trajectory:
    """r amplified steps from ``initial`` (a system state), recording each step.

    ``mode="shots"`` draws, for every step, the number of runs that survive all
    postselections so far and a multinomial system histogram for the survivors.
    """
    if mode not in ("statevector", "shots"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    if mode == "shots" and shots < 1:
        raise ConfigurationError("shot mode needs shots >= 1")
    system = initial.amplitudes if isinstance(initial, StateVector) else np.asarray(initial, dtype=complex)
    if system.shape != (1 << model.n_qubits,):
        raise ConfigurationError(f"initial state has {system.shape[0]} amplitudes, model needs {1 << model.n_qubits}")
    if layout is None:
        layout = model.meta.get("layout")
    rng = np.random.default_rng() if rng is None else rng
    traj = Trajectory(layout, engine="tts")
    survival = 1.0

    def record(step: int, amps: np.ndarray, success: float | None):
        if mode == "statevector":
            traj.record(step, step * config.tau, amplitudes=amps, ancilla_success=success)
            return
        alive = int(rng.binomial(shots, min(survival, 1.0)))
        probs = np.abs(amps) ** 2
        probs = probs / probs.sum()
        counts = rng.multinomial(alive, probs) if alive else np.zeros_like(probs)
        freq = counts / alive if alive else probs * 0.0
        traj.record(step, step * config.tau, probabilities=freq, ancilla_success=success, shots=alive)

    dim = system.shape[0]
    record(0, system, None)
    if config.r == 0:
        return traj
    walk = WalkOperator(model, config)
    state = walk.new_state(system)
    for step in range(1, config.r + 1):
        state, outcome = oaa_step(state, walk)
        survival *= outcome.success_probability
        record(step, state.amplitudes[:dim].copy(), outcome.success_probability)
    return traj

