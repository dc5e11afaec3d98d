import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from lfscatter.errors import ConfigurationError
from lfscatter.hamiltonian import HamiltonianModel, PauliTerm, pauli_matrix
from lfscatter.reference import dense_hamiltonian, taylor_polynomial, tts_matrix_emulation
from lfscatter.statevector import StateVector, apply_gates, marginal_probabilities
from lfscatter.tts import (
    LN2,
    TaylorWeights,
    TTSConfig,
    WalkOperator,
    evolve,
    normalization_factor,
    oaa_step,
    prepare_operator,
    rotation_angles,
    select_operator,
    taylor_tail,
    term_amplitudes,
    truncation_order_for,
)

from conftest import random_state, random_toy, taylor_sum

HALF_X = HamiltonianModel(1, (), (PauliTerm(0.5, "X"),))


def test_normalization_factor():
    assert normalization_factor(0, LN2) == 1.0
    assert normalization_factor(40, LN2) == pytest.approx(2.0, abs=1e-15)
    n3 = 1 + LN2 + LN2**2 / 2 + LN2**3 / 6
    assert normalization_factor(3, LN2) == pytest.approx(n3, abs=1e-15)
    assert normalization_factor(3, LN2) == pytest.approx(1.9888778, abs=1e-7)


def test_rotation_angles():
    theta = rotation_angles(3, LN2)
    # 2 arcsin(sqrt(1 - 1/N_3)) evaluated independently
    n3 = 1 + LN2 + LN2**2 / 2 + LN2**3 / 6
    assert theta[0] == pytest.approx(2 * math.asin(math.sqrt(1 - 1 / n3)), abs=1e-12)
    assert theta[0] == pytest.approx(1.5652041, abs=1e-7)
    assert np.all((theta > 0) & (theta < math.pi))


def unary_readout(model, config):
    state = StateVector.zeros(config.registers(model))
    apply_gates(state, prepare_operator(model, config))
    probs = marginal_probabilities(state, "y0")
    return {format(i, f"0{config.K}b"): p for i, p in enumerate(probs) if p > 1e-15}


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_unary_weights_by_readout(K):
    model = HamiltonianModel(2, (PauliTerm(0.3, "ZI"), PauliTerm(-0.2, "IZ")))
    config = TTSConfig.for_model(model, K)
    readout = unary_readout(model, config)
    n_k = sum(LN2**k / math.factorial(k) for k in range(K + 1))
    expected = {"1" * k + "0" * (K - k): LN2**k / math.factorial(k) / n_k for k in range(K + 1)}
    assert readout.keys() == expected.keys()
    for key in expected:
        assert readout[key] == pytest.approx(expected[key], abs=1e-12)


def test_single_term_has_empty_index_registers():
    config = TTSConfig.for_model(HALF_X, 3)
    assert [w for _, w in config.registers(HALF_X)] == [3, 0, 0, 0, 1]
    assert all(op.kind == "ry" for op in prepare_operator(HALF_X, config))


def test_full_ancilla_readout_matches_eta():
    model = HamiltonianModel(1, (PauliTerm(0.7, "Z"), PauliTerm(-0.3, "I")))
    K = 2
    config = TTSConfig.for_model(model, K)
    state = StateVector.zeros(config.registers(model))
    apply_gates(state, prepare_operator(model, config))
    probs = np.abs(state.amplitudes.reshape(1 << K, 2, 2, 2)) ** 2
    probs = probs.sum(axis=-1)  # trace out the system qubit (it stays |0>)
    lam = 1.0
    n_k = normalization_factor(K, LN2)
    coeffs = [0.7, 0.3]  # model order: "Z" then "I"
    # j = (k, l_1..l_k); unused index registers are traced out
    assert probs[0b00].sum() == pytest.approx(1 / n_k, abs=1e-12)
    for l1 in range(2):
        eta = LN2 * coeffs[l1] / lam
        assert probs[0b10, l1, :].sum() == pytest.approx(eta / n_k, abs=1e-12)
    for l1, l2 in itertools.product(range(2), repeat=2):
        eta = LN2**2 / 2 * coeffs[l1] * coeffs[l2]
        assert probs[0b11, l1, l2] == pytest.approx(eta / n_k, abs=1e-12)
    assert probs[0b01].sum() < 1e-15


def test_negative_weights_rejected():
    with pytest.raises(ConfigurationError):
        term_amplitudes([0.5, -0.1], 1)


def test_select_leaves_zero_slots_untouched():
    rng = np.random.default_rng(0)
    model = random_toy(rng, n_qubits=2, n_kinetic=1, n_interaction=2)
    config = TTSConfig.for_model(model, 2)
    psi = random_state(rng, 4)
    regs = config.registers(model)
    state = StateVector.from_system(psi, regs)
    # populate the index registers but keep y0 = 00
    amps = state.amplitudes.reshape(4, -1, 4)
    amps[0, :, :] = psi / math.sqrt(amps.shape[1])
    before = state.amplitudes.copy()
    select_operator(model, config).apply(state)
    assert np.array_equal(state.amplitudes, before)


def test_select_single_branch():
    config = TTSConfig.for_model(HALF_X, 1)
    psi = random_state(np.random.default_rng(1), 2)
    state = StateVector(np.concatenate([np.zeros(2), psi]).astype(complex), config.registers(HALF_X))
    select_operator(HALF_X, config).apply(state)
    assert np.abs(state.amplitudes[2:] - (-1j) * pauli_matrix("X") @ psi).max() < 1e-15


def test_select_index_out_of_range():
    sel = select_operator(HALF_X, TTSConfig.for_model(HALF_X, 1))
    with pytest.raises(ConfigurationError):
        sel.term_string(1)


@pytest.mark.parametrize("seed", range(8))
def test_fused_select_matches_gate_form(seed):
    rng = np.random.default_rng(seed)
    model = random_toy(rng)
    config = TTSConfig.for_model(model, int(rng.integers(1, 4)))
    sel = select_operator(model, config)
    n = sum(w for _, w in config.registers(model))
    amps = random_state(rng, 1 << n)
    fused = StateVector(amps.copy(), config.registers(model))
    gates = StateVector(amps.copy(), config.registers(model))
    sel.apply(fused)
    apply_gates(gates, sel.gates())
    assert np.abs(fused.amplitudes - gates.amplitudes).max() < 1e-12
    sel.apply(fused, adjoint=True)
    assert np.abs(fused.amplitudes - amps).max() < 1e-12


def test_two_term_block_matches_dense_sum():
    model = HamiltonianModel(1, (PauliTerm(0.4, "Z"),), (PauliTerm(-0.6, "X"),))
    config = TTSConfig.for_model(model, 2)
    block = WalkOperator(model, config).block()
    h = 0.4 * pauli_matrix("Z") - 0.6 * pauli_matrix("X")
    expected = taylor_sum(h, config.tau, 2) / normalization_factor(2, LN2)
    assert np.abs(block - expected).max() < 1e-12


def test_empty_model_block_is_identity():
    model = HamiltonianModel(2)
    config = TTSConfig.for_model(model, 2)
    assert np.abs(WalkOperator(model, config).block() - np.eye(4)).max() < 1e-15


def test_half_x_block():
    config = TTSConfig.for_model(HALF_X, 3)
    assert config.tau * 0.5 == pytest.approx(LN2)
    block = WalkOperator(HALF_X, config).block()
    expected = taylor_sum(0.5 * pauli_matrix("X"), config.tau, 3) / normalization_factor(3, LN2)
    assert np.abs(block - expected).max() < 1e-12


def test_gate_form_of_walk_matches_fused():
    rng = np.random.default_rng(12)
    model = random_toy(rng, n_qubits=2, n_perp=2, n_kinetic=2, n_interaction=2)
    config = TTSConfig.for_model(model, 2)
    walk = WalkOperator(model, config)
    psi = random_state(rng, 4)
    a = walk.apply(walk.new_state(psi))
    b = apply_gates(walk.new_state(psi), walk.gates())
    assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-12


@pytest.mark.slow
def test_demo_block_on_initial_state(demo):
    _, _, model, psi0 = demo
    config = TTSConfig.for_model(model, 3)
    walk = WalkOperator(model, config)
    state = walk.apply(walk.new_state(psi0))
    h = dense_hamiltonian(model).matrix
    expected = taylor_polynomial(h, config.tau, 3) @ psi0 / normalization_factor(3, LN2)
    assert np.abs(state.amplitudes[:64] - expected).max() < 1e-10


def test_amplified_amplitude_at_two():
    assert TaylorWeights(60, LN2).amplified_amplitude == pytest.approx(1.0, abs=1e-15)
    n3 = normalization_factor(3, LN2)
    assert TaylorWeights(3, LN2).amplified_amplitude ** 2 == pytest.approx((3 / n3 - 4 / n3**3) ** 2)
    assert (3 / n3 - 4 / n3**3) ** 2 == pytest.approx(0.9999, abs=1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_oaa_step_matches_amplified_algebra(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_toy(rng)
    config = TTSConfig.for_model(model, 3)
    walk = WalkOperator(model, config)
    psi = random_state(rng, 1 << model.n_qubits)
    state, outcome = oaa_step(walk.new_state(psi), walk)
    a = taylor_sum(dense_hamiltonian(model).matrix, config.tau, 3) / normalization_factor(3, LN2)
    raw = (3 * a - 4 * a @ a.conj().T @ a) @ psi
    dim = psi.size
    assert outcome.success_probability == pytest.approx(np.vdot(raw, raw).real, abs=1e-12)
    assert np.abs(state.amplitudes[:dim] - raw / np.linalg.norm(raw)).max() < 1e-12
    assert not state.amplitudes[dim:].any()
    assert outcome.success_probability >= 0.999
    exact = expm(-1j * config.tau * dense_hamiltonian(model).matrix) @ psi
    assert np.linalg.norm(state.amplitudes[:dim] - exact) <= taylor_tail(3)


@pytest.mark.parametrize("seed", range(5))
def test_taylor_polynomial_error_and_near_unitarity(seed):
    rng = np.random.default_rng(200 + seed)
    model = random_toy(rng)
    h = dense_hamiltonian(model).matrix
    for K in (1, 2, 3, 4):
        config = TTSConfig.for_model(model, K)
        u_k = taylor_sum(h, config.tau, K)
        exact = expm(-1j * config.tau * h)
        assert np.linalg.norm(u_k - exact, 2) <= taylor_tail(K) + 1e-14
        delta = abs(normalization_factor(K, LN2) - 2)
        assert np.linalg.norm(u_k @ u_k.conj().T - np.eye(h.shape[0]), 2) <= 2 * delta + delta**2 + 1e-14


def test_evolve_zero_steps():
    psi = np.array([1, 0], dtype=complex)
    traj = evolve(psi, HALF_X, TTSConfig.for_model(HALF_X, 3, r=0))
    assert len(traj) == 1
    assert traj.final.probabilities[0] == 1.0


def test_evolve_half_x_four_steps():
    psi = np.array([1, 0], dtype=complex)
    config = TTSConfig.for_model(HALF_X, 3, r=4)
    traj = evolve(psi, HALF_X, config)
    exact = expm(-1j * 4 * config.tau * 0.5 * pauli_matrix("X")) @ psi
    assert np.linalg.norm(traj.final.amplitudes - exact) <= 4 * taylor_tail(3)
    assert traj.x_plus[-1] == pytest.approx(4 * config.tau)
    assert all(p >= 0.999 for p in traj.ancilla_success[1:])


def test_evolve_matches_matrix_emulation():
    rng = np.random.default_rng(31)
    model = random_toy(rng, n_qubits=3, n_kinetic=2, n_interaction=2, n_perp=2)
    psi = random_state(rng, 8)
    for K in (1, 2, 3):
        config = TTSConfig.for_model(model, K, r=5)
        circuit = evolve(psi, model, config)
        matrix = tts_matrix_emulation(psi, model, K, 5, config.tau)
        assert np.abs(circuit.amplitudes - matrix.amplitudes).max() < 1e-12


def test_non_integer_steps_rejected():
    with pytest.raises(ConfigurationError):
        TTSConfig(3, 1.0, r=2.5)
    with pytest.raises(ConfigurationError):
        TTSConfig(0, 1.0)


def test_for_model_fixes_lambda_tau():
    rng = np.random.default_rng(3)
    model = random_toy(rng)
    config = TTSConfig.for_model(model, 3, r=7)
    assert abs(config.tau * model.lambda_norm - LN2) < 1e-12
    assert config.x_plus == pytest.approx(7 * config.tau)


def test_shot_mode_is_reproducible_and_normalized():
    psi = np.array([1, 0], dtype=complex)
    config = TTSConfig.for_model(HALF_X, 2, r=3)
    t1 = evolve(psi, HALF_X, config, mode="shots", shots=1000, rng=np.random.default_rng(4))
    t2 = evolve(psi, HALF_X, config, mode="shots", shots=1000, rng=np.random.default_rng(4))
    assert np.array_equal(t1.probabilities, t2.probabilities)
    assert np.allclose(t1.probabilities.sum(axis=1), 1.0)
    assert all(s.shots <= 1000 for s in t1.steps)
    with pytest.raises(ConfigurationError):
        evolve(psi, HALF_X, config, mode="shots", shots=0)


def test_truncation_order_for():
    # per-step budget: Lambda x+ = ln2 means r = 1
    assert truncation_order_for(0.02, 1.0, LN2) == 3
    assert truncation_order_for(100.0, 1.0, LN2) == 1
    lam = 0.110024
    assert truncation_order_for(0.01, lam, 25 * LN2 / lam) == 5


def test_taylor_tail():
    assert taylor_tail(3) == pytest.approx(0.0111, abs=5e-5)
    assert taylor_tail(3) == pytest.approx(2 - normalization_factor(3, LN2), abs=1e-15)
