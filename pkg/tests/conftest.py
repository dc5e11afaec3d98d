import math

import numpy as np
import pytest

from lfscatter.hamiltonian import HamiltonianModel, PauliTerm, demo_fixture, demo_lattice


def random_toy(rng, n_qubits=None, n_kinetic=None, n_interaction=None, n_perp=None):
    """Random model with <= 3 system qubits and L <= 4.

    Kinetic strings are I/Z; interaction strings use the full alphabet and are
    conjugated by a shifted QFT block placed at qubit 0.
    """
    n_perp = n_perp or int(rng.choice([1, 2]))
    width = (2 * n_perp - 1).bit_length()
    n = n_qubits or int(rng.integers(width, 4))
    n = max(n, width)
    while True:
        L1 = int(rng.integers(0, 3)) if n_kinetic is None else n_kinetic
        L2 = int(rng.integers(0, 3)) if n_interaction is None else n_interaction
        if 1 <= L1 + L2 <= 4:
            break
    kin = [PauliTerm(float(rng.normal()), "".join(rng.choice(list("IZ"), n))) for _ in range(L1)]
    inter = [PauliTerm(float(rng.normal()), "".join(rng.choice(list("IXYZ"), n))) for _ in range(L2)]
    blocks = ((0, width),) if L2 else ()
    return HamiltonianModel(n, tuple(kin), tuple(inter), blocks, n_perp)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def taylor_sum(h, tau, K):
    out = np.zeros_like(h, dtype=complex)
    for k in range(K + 1):
        out += np.linalg.matrix_power(-1j * tau * h, k) / math.factorial(k)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def demo():
    spec, layout = demo_lattice()
    model = demo_fixture()
    psi0 = np.zeros(layout.dimension, dtype=complex)
    psi0[int("101000", 2)] = 1.0
    return spec, layout, model, psi0


ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def report(criterion: int, ok: bool, detail: str) -> None:
    """Record one check of an acceptance criterion; a criterion passes only if all its checks do."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  " + " | ".join(d for _, d in checks))
