import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfscatter.cgc import ColorField
from lfscatter.errors import ConfigurationError, WidthMismatchError
from lfscatter.hamiltonian import (
    HamiltonianModel,
    PauliTerm,
    assemble,
    build_interaction,
    build_kinetic,
    color_generator,
    demo_fixture,
    demo_lattice,
    gell_mann,
    kinetic_terms,
    l1_norm,
    pauli_decompose,
    pauli_decompose_matrix,
    pauli_matrix,
    resource_estimate,
)
from lfscatter.lattice import EncodingLayout, build_lattice
from lfscatter.reference import dense_hamiltonian

# reference kinetic coefficients, 1e-3 GeV
REFERENCE_KINETIC = {
    "IIII": 1.39383, "IIIZ": 0.232226, "IIZI": 0.464452, "IIZZ": 0.464452,
    "IZII": 0.232226, "ZIII": 0.464452, "ZZII": 0.464452,
}


def test_kinetic_entry_at_origin():
    spec = build_lattice(2, 5.0)
    grid = build_kinetic(spec, 0.02, 850.0)
    assert grid[2, 2] == pytest.approx(4.7059e-7, rel=1e-4)
    assert build_kinetic(spec, 0.0, 850.0)[2, 2] == 0.0


def test_kinetic_rejects_nonpositive_p_plus():
    with pytest.raises(ConfigurationError):
        build_kinetic(build_lattice(2, 5.0), 0.02, 0.0)


def test_kinetic_rebuild_matches_reference_coefficients():
    spec = build_lattice(2, 5.0)
    terms = {t.string: t.coeff for t in pauli_decompose(build_kinetic(spec, 0.02, 850.0).ravel())}
    assert set(terms) == set(REFERENCE_KINETIC)
    for s, c in REFERENCE_KINETIC.items():
        assert terms[s] == pytest.approx(c * 1e-3, rel=1e-5)


def test_decompose_trivial_diagonals():
    assert pauli_decompose([1.0, 1.0]) == [PauliTerm(1.0, "I")]
    assert pauli_decompose([1.0, -1.0]) == [PauliTerm(1.0, "Z")]


def test_decompose_rejects_bad_length():
    with pytest.raises(WidthMismatchError):
        pauli_decompose([1.0, 2.0, 3.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_decompose_reconstructs(n, seed):
    d = np.random.default_rng(seed).normal(size=1 << n)
    terms = pauli_decompose(d, prune=0.0)
    rebuilt = sum(t.coeff * np.diag(pauli_matrix(t.string)).real for t in terms)
    assert np.abs(rebuilt - d).max() < 1e-12
    assert all(t.is_diagonal for t in terms)


def test_decompose_matrix_roundtrip():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rebuilt = sum(c * pauli_matrix(s) for c, s in pauli_decompose_matrix(m))
    assert np.abs(rebuilt - m).max() < 1e-12


def test_color_generators():
    for a in range(9):
        t = color_generator(a)
        assert np.allclose(t, t.conj().T)
    assert np.array_equal(color_generator(0), np.eye(4))
    t1 = (pauli_matrix("IX") + pauli_matrix("ZX")) / 4
    assert np.allclose(color_generator(1)[:3, :3], t1[:3, :3])
    # Gell-Mann normalization Tr(l_a l_b) = 2 delta_ab
    for a in range(1, 9):
        for b in range(1, 9):
            assert np.trace(gell_mann(a) @ gell_mann(b)) == pytest.approx(2.0 * (a == b))


def test_zero_field_gives_no_interaction():
    spec, layout = demo_lattice()
    assert build_interaction(np.zeros((8, 4, 4)), spec, 1.0, layout) == []


def test_uniform_single_color_field():
    spec, layout = demo_lattice()
    field = np.zeros((8, 4, 4))
    field[0] = 0.3
    terms = build_interaction(ColorField(field), spec, 1.0, layout)
    assert {t.string: t.coeff for t in terms} == pytest.approx({"IIIIIX": 0.3 / 4, "IIIIZX": 0.3 / 4})


def test_single_color_structure_is_spatial_times_t1():
    spec, layout = demo_lattice()
    field = np.zeros((8, 4, 4))
    field[0] = np.random.default_rng(3).normal(size=(4, 4))
    terms = build_interaction(field, spec, 1.0, layout, colors=[1])
    assert {t.string[-2:] for t in terms} == {"IX", "ZX"}
    dense = sum(t.coeff * pauli_matrix(t.string) for t in terms)
    expected = np.kron(np.diag(field[0].ravel()), color_generator(1))
    assert np.abs(dense - expected)[:, :].reshape(16, 4, 16, 4)[:, :3, :, :3].max() < 1e-12


def test_interaction_lattice_mismatch():
    spec, layout = demo_lattice()
    with pytest.raises(WidthMismatchError):
        build_interaction(np.zeros((8, 6, 6)), spec, 1.0, layout)


def test_demo_fixture_counts_and_norm():
    model = demo_fixture()
    assert (model.L1, model.L2, model.L) == (7, 32, 39)
    assert model.lambda_norm == pytest.approx(0.110024, rel=1e-5)
    assert l1_norm(model) == model.lambda_norm


def test_demo_fixture_reference_entries():
    model = demo_fixture()
    kin = {t.string: t.coeff for t in model.kinetic_terms}
    inter = {t.string: t.coeff for t in model.interaction_terms}
    assert 2 * kin["IIIIII"] == pytest.approx(1.39383e-3)
    # W identity coefficient enters as (346.525e-3) * (1/4 from T^1) * (1/2)
    assert inter["IIIIIX"] * 8 == pytest.approx(346.525e-3)
    assert model.qft_blocks == ((0, 2), (2, 2))


def test_assemble_halves_and_orders():
    layout = EncodingLayout(1, 1, omit_p_plus=True, omit_helicity=True)
    kin = [PauliTerm(2.0, "ZIII"), PauliTerm(-4.0, "IIII")]
    model = assemble(kin, [], layout)
    assert model.L2 == 0
    assert [t.string for t in model.terms] == ["IIII", "ZIII"]
    assert model.lambda_norm == pytest.approx(3.0)


def test_assemble_width_mismatch():
    layout = EncodingLayout(1, 1, omit_p_plus=True, omit_helicity=True)
    with pytest.raises(WidthMismatchError):
        assemble([PauliTerm(1.0, "ZZ")], [], layout)


def test_kinetic_terms_must_be_diagonal():
    with pytest.raises(ConfigurationError):
        HamiltonianModel(1, (PauliTerm(1.0, "X"),))


def test_l1_norm_properties():
    single = HamiltonianModel(1, (PauliTerm(0.5, "Z"),))
    assert l1_norm(single) == 0.5
    model = demo_fixture()
    assert model.scaled(3.0).lambda_norm == pytest.approx(3 * model.lambda_norm)
    kin_only = HamiltonianModel(6, model.kinetic_terms, (), model.qft_blocks, 2)
    int_only = HamiltonianModel(6, (), model.interaction_terms, model.qft_blocks, 2)
    assert model.lambda_norm == pytest.approx(kin_only.lambda_norm + int_only.lambda_norm, rel=1e-12)


def test_assembled_models_are_hermitian(rng):
    spec, layout = demo_lattice()
    field = np.random.default_rng(9).normal(size=(8, 4, 4))
    model = assemble(kinetic_terms(spec, layout, 0.02, 850.0), build_interaction(field, spec, 1.0, layout), layout)
    h = dense_hamiltonian(model).matrix
    assert np.abs(h - h.conj().T).max() < 1e-12


def test_kinetic_terms_with_longitudinal_block():
    spec = build_lattice(1, 5.0, N_par=2, L_par=3.0)
    layout = EncodingLayout.for_lattice(spec)
    terms = kinetic_terms(spec, layout, 0.1, None)
    assert all(t.n_qubits == layout.n_qubits and t.is_diagonal for t in terms)
    dense = np.diag(sum(t.coeff * pauli_matrix(t.string) for t in terms)).real
    # code (q+ = 1, q1 = 0, q2 = -1, helicity 1, color 00): p+ = 1.5 a_p_par
    index = int("1" + "1" + "0" + "1" + "00", 2)
    p = math.pi / 5.0
    assert dense[index] == pytest.approx((0.1**2 + p**2) / (1.5 * math.pi / 3.0))


def test_resource_estimate():
    demo = resource_estimate(demo_fixture(), 3)
    assert (demo["system_qubits"], demo["ancilla_qubits"], demo["total_qubits"]) == (6, 21, 27)
    assert (demo["L1"], demo["L2"]) == (7, 32)
    tiny = resource_estimate(HamiltonianModel(1, (PauliTerm(1.0, "Z"),)), 1)
    assert (tiny["ancilla_qubits"], tiny["total_qubits"]) == (1, 2)
    k4 = resource_estimate(demo_fixture(), 4)
    assert (k4["ancilla_qubits"], k4["total_qubits"]) == (28, 34)
    with pytest.raises(ConfigurationError):
        resource_estimate(HamiltonianModel(1), 3)


def test_json_roundtrip(tmp_path):
    model = demo_fixture()
    path = tmp_path / "model.json"
    model.save(path)
    data = json.loads(path.read_text())
    assert data["units"] == "GeV"
    assert data["lambda"] == pytest.approx(0.110024, rel=1e-5)
    back = HamiltonianModel.load(path)
    assert back == model


def test_json_rejects_inconsistent_lambda():
    data = demo_fixture().to_json()
    data["lambda"] = 1.0
    with pytest.raises(ConfigurationError):
        HamiltonianModel.from_json(data)
