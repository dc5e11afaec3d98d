"""Dense-matrix oracles: the explicit Hamiltonian, exact evolution and a Taylor-step emulation.

Nothing here reuses the circuit path; the transform matrices and Pauli strings
are rebuilt from scratch with Kronecker products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, WidthMismatchError
from .hamiltonian import HamiltonianModel
from .lattice import EncodingLayout
from .observables import Trajectory

__all__ = [
    "DenseOperator",
    "dense_hamiltonian",
    "dense_qft",
    "exact_evolve",
    "exact_trajectory",
    "taylor_polynomial",
    "tts_matrix_emulation",
]

_SINGLE = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_DIMENSION = 1 << 12


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol * max(1.0, np.abs(m).max(initial=0.0)))

    def is_unitary(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.abs(m.conj().T @ m - np.eye(m.shape[0])).max() < tol)


def _string_matrix(string: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for c in string:
        out = np.kron(out, _SINGLE[c])
    return out


def dense_qft(n_perp: int) -> np.ndarray:
    """Shifted DFT on one transverse block, built entry by entry; padding codes map to themselves."""
    m = 2 * n_perp
    width = (m - 1).bit_length()
    f = np.eye(1 << width, dtype=complex)
    for row in range(m):
        for col in range(m):
            n, q = row - n_perp, col - n_perp
            f[row, col] = complex(math.cos(2 * math.pi * q * n / m), math.sin(2 * math.pi * q * n / m)) / math.sqrt(m)
    return f


def _transform(model: HamiltonianModel) -> np.ndarray:
    n = model.n_qubits
    f = np.ones((1, 1), dtype=complex)
    pos = 0
    for start, width in sorted(model.qft_blocks):
        f = np.kron(f, np.eye(1 << (start - pos)))
        f = np.kron(f, dense_qft(model.n_perp))
        pos = start + width
    return np.kron(f, np.eye(1 << (n - pos)))


def dense_hamiltonian(model: HamiltonianModel) -> DenseOperator:
    """sum(kinetic) + F^dag sum(interaction) F as an explicit matrix (GeV)."""
    dim = 1 << model.n_qubits
    if dim > MAX_DIMENSION:
        raise WidthMismatchError(f"{model.n_qubits} qubits is too large for a dense matrix")
    h = np.zeros((dim, dim), dtype=complex)
    for t in model.kinetic_terms:
        h += t.coeff * _string_matrix(t.string)
    if model.interaction_terms:
        v = np.zeros((dim, dim), dtype=complex)
        for t in model.interaction_terms:
            v += t.coeff * _string_matrix(t.string)
        f = _transform(model)
        h += f.conj().T @ v @ f
    return DenseOperator(h)


class _Spectrum:
    def __init__(self, hamiltonian: DenseOperator | np.ndarray):
        h = hamiltonian if isinstance(hamiltonian, DenseOperator) else DenseOperator(np.asarray(hamiltonian, dtype=complex))
        if not h.is_hermitian():
            raise ConfigurationError("exact evolution needs a Hermitian Hamiltonian")
        self.energies, self.vectors = np.linalg.eigh(h.matrix)

    def propagator(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def exact_evolve(hamiltonian: DenseOperator | np.ndarray, t: float, state: np.ndarray | None = None) -> np.ndarray:
    """e^{-iHt} via eigendecomposition, or its action on ``state`` when given."""
    u = _Spectrum(hamiltonian).propagator(t)
    return u if state is None else u @ np.asarray(state, dtype=complex)


def exact_trajectory(initial: np.ndarray, model_or_h: HamiltonianModel | DenseOperator, tau: float, r: int,
                     layout: EncodingLayout | None = None) -> Trajectory:
    if isinstance(model_or_h, HamiltonianModel):
        h = dense_hamiltonian(model_or_h)
        layout = layout if layout is not None else model_or_h.meta.get("layout")
    else:
        h = model_or_h
    spectrum = _Spectrum(h)
    psi0 = np.asarray(initial, dtype=complex)
    traj = Trajectory(layout, engine="exact")
    for step in range(r + 1):
        traj.record(step, step * tau, amplitudes=spectrum.propagator(step * tau) @ psi0)
    return traj


def taylor_polynomial(h: np.ndarray, tau: float, K: int) -> np.ndarray:
    """U_K = sum_{k<=K} (-i tau H)^k / k!."""
    dim = h.shape[0]
    out = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for k in range(1, K + 1):
        term = term @ (-1j * tau * h) / k
        out = out + term
    return out


def tts_matrix_emulation(initial: np.ndarray, model: HamiltonianModel, K: int, r: int, tau: float | None = None,
                         layout: EncodingLayout | None = None, assume_unitary: bool = False) -> Trajectory:
    """Per-step amplified Taylor step as dense matrices, renormalized after each step.

    With A = U_K / N_K one amplification round maps psi to (3A - 4 A A^dag A) psi.
    ``assume_unitary`` replaces that with (3/N_K - 4/N_K^3) U_K psi, which is
    exact only when U_K is unitary.
    """
    lam = model.lambda_norm
    if tau is None:
        tau = math.log(2.0) / lam if lam > 0 else 1.0
    h = dense_hamiltonian(model).matrix
    n_k = sum((lam * tau) ** k / math.factorial(k) for k in range(K + 1))
    a = taylor_polynomial(h, tau, K) / n_k
    if assume_unitary:
        step_op = (3.0 / n_k - 4.0 / n_k**3) * taylor_polynomial(h, tau, K)
    else:
        step_op = 3.0 * a - 4.0 * a @ a.conj().T @ a
    psi = np.asarray(initial, dtype=complex).copy()
    traj = Trajectory(layout if layout is not None else model.meta.get("layout"), engine="tts-matrix")
    traj.record(0, 0.0, amplitudes=psi)
    for step in range(1, r + 1):
        psi = step_op @ psi
        p = float(np.vdot(psi, psi).real)
        psi = psi / math.sqrt(p)
        traj.record(step, step * tau, amplitudes=psi, ancilla_success=p)
    return traj
