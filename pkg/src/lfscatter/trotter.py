"""First-order product-formula evolution of a HamiltonianModel.

Each Pauli-string exponential is applied exactly (strings square to one), so all
of the error is splitting error. One step is the operator

    prod_l exp(-i tau' a_l k_l)  F^dag  prod_l exp(-i tau' b_l v_l)  F

acting on the state from the right: F first, the interaction exponentials in
coordinate space, F^dag back, then the kinetic exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .errors import ConfigurationError, WidthMismatchError
from .hamiltonian import HamiltonianModel
from .lattice import EncodingLayout
from .observables import Trajectory
from .statevector import GateOp, StateVector, apply_gate, pauli_masks

__all__ = ["TrotterConfig", "trotter_step", "trotter_evolve", "trotter_steps_for"]


@dataclass(frozen=True)
class TrotterConfig:
    tau_prime: float
    r_prime: int = 1
    epsilon: float | None = None

    def __post_init__(self):
        if not (self.tau_prime > 0 and math.isfinite(self.tau_prime)):
            raise ConfigurationError(f"tau' must be positive, got {self.tau_prime}")
        if int(self.r_prime) != self.r_prime or self.r_prime < 0:
            raise ConfigurationError(f"r' must be a non-negative integer, got {self.r_prime}")
        object.__setattr__(self, "r_prime", int(self.r_prime))

    @property
    def x_plus(self) -> float:
        return self.r_prime * self.tau_prime


def trotter_steps_for(epsilon: float, lam: float, x_plus: float) -> int:
    """r' = ceil((Lambda x+)^2 / epsilon)."""
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    return max(1, math.ceil((lam * x_plus) ** 2 / epsilon))


def _exponentiate(psi: np.ndarray, terms, tau_prime: float) -> None:
    for t in terms:
        x, z, ph = pauli_masks(t.string)
        theta = tau_prime * t.coeff
        kern.trotter_factor(psi, x, z, complex(ph), math.cos(theta), math.sin(theta))


def _qft(state: StateVector, model: HamiltonianModel, inverse: bool) -> None:
    for start, width in model.qft_blocks:
        apply_gate(state, GateOp("shifted_qft", tuple(range(start, start + width)),
                                 {"n_perp": model.n_perp, "inverse": inverse}))


def trotter_step(state: StateVector | np.ndarray, model: HamiltonianModel, tau_prime: float) -> StateVector:
    """One first-order step on a system-only state (updated in place)."""
    if not isinstance(state, StateVector):
        state = StateVector(np.asarray(state, dtype=np.complex128), [("sys", model.n_qubits)])
    if state.n_qubits != model.n_qubits:
        raise WidthMismatchError(f"{state.n_qubits}-qubit state for a {model.n_qubits}-qubit model")
    if model.interaction_terms:
        _qft(state, model, inverse=False)
        _exponentiate(state.amplitudes, model.interaction_terms, tau_prime)
        _qft(state, model, inverse=True)
    _exponentiate(state.amplitudes, model.kinetic_terms, tau_prime)
    return state


def trotter_evolve(initial: np.ndarray | StateVector, model: HamiltonianModel, config: TrotterConfig,
                   layout: EncodingLayout | None = None, record_every: int = 1) -> Trajectory:
    """r' steps from ``initial``; every ``record_every``-th step (and the last) is recorded."""
    amps = initial.amplitudes if isinstance(initial, StateVector) else initial
    state = StateVector(np.array(amps, dtype=np.complex128), [("sys", model.n_qubits)])
    traj = Trajectory(layout if layout is not None else model.meta.get("layout"), engine="trotter")
    traj.record(0, 0.0, amplitudes=state.amplitudes)
    for step in range(1, config.r_prime + 1):
        trotter_step(state, model, config.tau_prime)
        if step % record_every == 0 or step == config.r_prime:
            traj.record(step, step * config.tau_prime, amplitudes=state.amplitudes)
    return traj
