"""LCU form of H = P^-/2: momentum-diagonal kinetic strings plus QFT-conjugated
coordinate-diagonal interaction strings tensored with color generators.

Pauli strings are written with qubit 0 leftmost; for a diagonal over ``n``
qubits, character ``i`` acts on bit ``n - 1 - i`` of the basis index.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, WidthMismatchError
from .lattice import EncodingLayout, LatticeSpec, bits_for

__all__ = [
    "PauliTerm",
    "HamiltonianModel",
    "PAULI",
    "pauli_matrix",
    "gell_mann",
    "color_generator",
    "pauli_decompose",
    "pauli_decompose_matrix",
    "build_kinetic",
    "kinetic_terms",
    "build_interaction",
    "assemble",
    "demo_fixture",
    "demo_lattice",
    "l1_norm",
    "resource_estimate",
    "DEMO_KINETIC",
    "DEMO_W1",
]

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Demo coefficients in 10^-3 GeV. Strings act on (p1 p2) or (x1 x2); p+ and
# helicity identities are dropped since both are fixed in the demo.
DEMO_KINETIC = {
    "IIII": 1.39383,
    "IIIZ": 0.232226,
    "IIZI": 0.464452,
    "IIZZ": 0.464452,
    "IZII": 0.232226,
    "ZIII": 0.464452,
    "ZZII": 0.464452,
}

DEMO_W1 = {
    "IIII": 346.525,
    "IIIZ": -0.709063,
    "IIZI": -2.73394,
    "IIZZ": -6.04144,
    "IZII": 3.56781,
    "IZIZ": -1.50894,
    "IZZI": -1.98356,
    "IZZZ": -0.209813,
    "ZIII": 10.7856,
    "ZIIZ": 1.18556,
    "ZIZI": -4.93806,
    "ZIZZ": 8.65394,
    "ZZII": -28.8128,
    "ZZIZ": 2.46544,
    "ZZZI": -8.74144,
    "ZZZZ": -3.80169,
}

DEMO_UNIT = 1e-3  # GeV


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    string: str

    def __post_init__(self):
        if set(self.string) - set("IXYZ"):
            raise ConfigurationError(f"bad Pauli string {self.string!r}")
        if not math.isfinite(self.coeff):
            raise ConfigurationError(f"non-finite coefficient for {self.string}")

    @property
    def n_qubits(self) -> int:
        return len(self.string)

    @property
    def is_diagonal(self) -> bool:
        return set(self.string) <= {"I", "Z"}

    def matrix(self) -> np.ndarray:
        return self.coeff * pauli_matrix(self.string)


def pauli_matrix(string: str) -> np.ndarray:
    if not string:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (PAULI[c] for c in string))


@dataclass(frozen=True)
class HamiltonianModel:
    """H = sum(kinetic) + F^dag (sum(interaction)) F with F the shifted QFT on ``qft_blocks``.

    Coefficients are final (the 1/2 of H = P^-/2 already applied).
    """

    n_qubits: int
    kinetic_terms: tuple[PauliTerm, ...] = ()
    interaction_terms: tuple[PauliTerm, ...] = ()
    qft_blocks: tuple[tuple[int, int], ...] = ()
    n_perp: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kinetic_terms", tuple(self.kinetic_terms))
        object.__setattr__(self, "interaction_terms", tuple(self.interaction_terms))
        object.__setattr__(self, "qft_blocks", tuple(tuple(b) for b in self.qft_blocks))
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise WidthMismatchError(f"term {t.string} has width {t.n_qubits}, model has {self.n_qubits}")
        for t in self.kinetic_terms:
            if not t.is_diagonal:
                raise ConfigurationError(f"kinetic term {t.string} is not diagonal")
        for start, width in self.qft_blocks:
            if start < 0 or start + width > self.n_qubits:
                raise WidthMismatchError(f"QFT block {(start, width)} outside {self.n_qubits} qubits")
            if width != bits_for(2 * self.n_perp):
                raise WidthMismatchError(f"QFT block width {width} does not fit 2*N_perp = {2 * self.n_perp}")

    @property
    def terms(self) -> tuple[PauliTerm, ...]:
        """Kinetic terms first, then interaction terms (LCU index order)."""
        return self.kinetic_terms + self.interaction_terms

    @property
    def L1(self) -> int:
        return len(self.kinetic_terms)

    @property
    def L2(self) -> int:
        return len(self.interaction_terms)

    @property
    def L(self) -> int:
        return self.L1 + self.L2

    @property
    def lambda_norm(self) -> float:
        return l1_norm(self)

    def scaled(self, factor: float) -> "HamiltonianModel":
        return HamiltonianModel(
            self.n_qubits,
            tuple(PauliTerm(factor * t.coeff, t.string) for t in self.kinetic_terms),
            tuple(PauliTerm(factor * t.coeff, t.string) for t in self.interaction_terms),
            self.qft_blocks,
            self.n_perp,
            dict(self.meta),
        )

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_perp": self.n_perp,
            "terms": [{"coeff": t.coeff, "string": t.string, "part": "kinetic"} for t in self.kinetic_terms]
            + [{"coeff": t.coeff, "string": t.string, "part": "interaction"} for t in self.interaction_terms],
            "qft_blocks": [list(b) for b in self.qft_blocks],
            "lambda": self.lambda_norm,
            "units": "GeV",
        }

    @classmethod
    def from_json(cls, data: dict) -> "HamiltonianModel":
        if data.get("units", "GeV") != "GeV":
            raise ConfigurationError(f"unsupported units {data.get('units')!r}")
        kin = [PauliTerm(float(t["coeff"]), t["string"]) for t in data["terms"] if t.get("part", "kinetic") == "kinetic"]
        inter = [PauliTerm(float(t["coeff"]), t["string"]) for t in data["terms"] if t.get("part") == "interaction"]
        model = cls(int(data["n_qubits"]), tuple(kin), tuple(inter), tuple(tuple(b) for b in data["qft_blocks"]),
                    int(data.get("n_perp", 1)))
        if "lambda" in data and not math.isclose(model.lambda_norm, float(data["lambda"]), rel_tol=1e-9, abs_tol=1e-15):
            raise ConfigurationError("stored lambda disagrees with the terms")
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "HamiltonianModel":
        return cls.from_json(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# Decomposition
# --------------------------------------------------------------------------

def _walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis (length 2^n)."""
    out = np.array(values, dtype=float, copy=True)
    n = out.shape[-1]
    h = 1
    while h < n:
        out = out.reshape(-1, n // (2 * h), 2, h)
        a = out[:, :, 0, :].copy()
        b = out[:, :, 1, :]
        out[:, :, 0, :] = a + b
        out[:, :, 1, :] = a - b
        out = out.reshape(-1, n)
        h *= 2
    return out.reshape(values.shape)


def _z_string(mask: int, n: int) -> str:
    return "".join("Z" if (mask >> (n - 1 - i)) & 1 else "I" for i in range(n))


def pauli_decompose(diag: Sequence[float] | np.ndarray, prune: float = 1e-12) -> list[PauliTerm]:
    """Decompose a real diagonal of length 2^n into I/Z strings, kappa = Tr(D sigma)/2^n.

    Terms with |kappa| <= prune * max|kappa| are dropped; output is sorted by string.
    """
    d = np.asarray(diag, dtype=float).ravel()
    n_states = d.size
    if n_states == 0 or n_states & (n_states - 1):
        raise WidthMismatchError(f"diagonal length {n_states} is not a power of two")
    n = n_states.bit_length() - 1
    kappa = _walsh_hadamard(d) / n_states
    cutoff = prune * float(np.abs(kappa).max()) if n_states else 0.0
    terms = [PauliTerm(float(kappa[m]), _z_string(m, n)) for m in range(n_states)
             if abs(kappa[m]) > cutoff and kappa[m] != 0.0]
    return sorted(terms, key=lambda t: t.string)


def pauli_decompose_matrix(matrix: np.ndarray, prune: float = 1e-12) -> list[tuple[complex, str]]:
    """General Pauli decomposition c_P = Tr(P M)/2^n (intended for small blocks)."""
    m = np.asarray(matrix, dtype=complex)
    dim = m.shape[0]
    n = dim.bit_length() - 1
    if m.shape != (dim, dim) or dim & (dim - 1):
        raise WidthMismatchError(f"matrix shape {m.shape} is not 2^n x 2^n")
    out = []
    coeffs = {}
    for chars in itertools.product("IXYZ", repeat=n):
        s = "".join(chars)
        coeffs[s] = np.trace(pauli_matrix(s) @ m) / dim
    scale = max(abs(c) for c in coeffs.values()) if coeffs else 0.0
    for s, c in coeffs.items():
        if abs(c) > prune * scale and c != 0:
            out.append((complex(c), s))
    return out


# --------------------------------------------------------------------------
# Color generators
# --------------------------------------------------------------------------

def gell_mann(a: int) -> np.ndarray:
    """Gell-Mann matrix lambda_a (a = 1..8); a = 0 gives the 3x3 identity."""
    g = np.zeros((3, 3), dtype=complex)
    if a == 0:
        return np.eye(3, dtype=complex)
    if a == 1:
        g[0, 1] = g[1, 0] = 1
    elif a == 2:
        g[0, 1], g[1, 0] = -1j, 1j
    elif a == 3:
        g[0, 0], g[1, 1] = 1, -1
    elif a == 4:
        g[0, 2] = g[2, 0] = 1
    elif a == 5:
        g[0, 2], g[2, 0] = -1j, 1j
    elif a == 6:
        g[1, 2] = g[2, 1] = 1
    elif a == 7:
        g[1, 2], g[2, 1] = -1j, 1j
    elif a == 8:
        g[0, 0] = g[1, 1] = 1 / math.sqrt(3)
        g[2, 2] = -2 / math.sqrt(3)
    else:
        raise ConfigurationError(f"color index {a} outside 0..8")
    return g


def color_generator(a: int) -> np.ndarray:
    """T^a embedded in the 2-qubit color block (code 11 row/column zero); T^0 is the 4x4 identity."""
    if a == 0:
        return np.eye(4, dtype=complex)
    t = np.zeros((4, 4), dtype=complex)
    t[:3, :3] = gell_mann(a) / 2
    return t


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------

def build_kinetic(spec: LatticeSpec, m_quark: float, p_plus: float) -> np.ndarray:
    """(m^2 + p_perp^2)/p+ on the (q1, q2) grid in code order, shape (2N_perp, 2N_perp)."""
    if not p_plus > 0:
        raise ConfigurationError(f"p+ must be positive, got {p_plus}")
    p = np.arange(-spec.N_perp, spec.N_perp) * spec.a_p_perp
    return (m_quark**2 + p[:, None] ** 2 + p[None, :] ** 2) / p_plus


def _embed(strings: dict[str, float], layout: EncodingLayout, color: str = "II") -> dict[str, float]:
    w = layout.widths
    pre = "I" * w["p_plus"]
    hel = "I" * w["helicity"]
    return {pre + s + hel + color: c for s, c in strings.items()}


def kinetic_terms(spec: LatticeSpec, layout: EncodingLayout, m_quark: float,
                  p_plus: float | None = None) -> list[PauliTerm]:
    """Kinetic strings over the full system layout (identity on helicity and color).

    With a populated p+ block the diagonal runs over (q+, q1, q2), p+ = (code + 1/2) a_p_par.
    Coefficients are those of P^-_QCD (no factor 1/2).
    """
    w = layout.widths
    if w["p_plus"]:
        codes = np.arange(1 << w["p_plus"])
        p_vals = (np.minimum(codes, layout.N_par - 1) + 0.5) * spec.a_p_par
        diag = np.stack([build_kinetic(spec, m_quark, pp).ravel() for pp in p_vals])
        # unused longitudinal codes repeat the last mode; they are never populated
        terms = pauli_decompose(diag.ravel())
        hel = "I" * w["helicity"]
        return [PauliTerm(t.coeff, t.string + hel + "II") for t in terms]
    if p_plus is None:
        if spec.fixed_p_plus is None:
            raise ConfigurationError("p+ must be given when the longitudinal block is absent")
        p_plus = spec.fixed_p_plus
    terms = pauli_decompose(build_kinetic(spec, m_quark, p_plus).ravel())
    embedded = _embed({t.string: t.coeff for t in terms}, layout)
    return sorted((PauliTerm(c, s) for s, c in embedded.items()), key=lambda t: t.string)


def build_interaction(field_or_array, spec: LatticeSpec, g: float, layout: EncodingLayout | None = None,
                      colors: Iterable[int] | None = None, prune: float = 1e-12) -> list[PauliTerm]:
    """Pauli terms of sum_a g A^-_a(x_perp) T^a, diagonal on the coordinate blocks.

    ``colors`` restricts the sum (e.g. ``[1]`` for the single-generator demo).
    Coefficients are those of V (no factor 1/2).
    """
    A = getattr(field_or_array, "A_minus", field_or_array)
    A = np.asarray(A, dtype=float)
    if A.ndim != 3 or A.shape[1:] != (spec.n_sites, spec.n_sites):
        raise WidthMismatchError(f"field shape {A.shape} does not match lattice with {spec.n_sites} sites")
    if layout is None:
        layout = EncodingLayout.for_lattice(spec, omit_p_plus=True, omit_helicity=True)
    if layout.N_perp != spec.N_perp:
        raise WidthMismatchError("layout and lattice disagree on N_perp")
    w = layout.widths
    pre, hel = "I" * w["p_plus"], "I" * w["helicity"]
    selected = range(1, A.shape[0] + 1) if colors is None else colors
    acc: dict[str, float] = {}
    for a in selected:
        field_a = A[a - 1]
        if not np.any(field_a):
            continue
        spatial = pauli_decompose(g * field_a.ravel(), prune=0.0)
        for coeff_c, cstr in pauli_decompose_matrix(color_generator(a)):
            for t in spatial:
                s = pre + t.string + hel + cstr
                acc[s] = acc.get(s, 0.0) + (t.coeff * coeff_c).real
    if not acc:
        return []
    scale = max(abs(c) for c in acc.values())
    return sorted((PauliTerm(c, s) for s, c in acc.items() if abs(c) > prune * scale), key=lambda t: t.string)


def assemble(kinetic: Sequence[PauliTerm], interaction: Sequence[PauliTerm], layout: EncodingLayout,
             scale: float = 0.5) -> HamiltonianModel:
    """Combine P^-_QCD and V pieces into the LCU model of H = P^-/2 (``scale`` applied once here)."""
    n = layout.n_qubits
    for t in list(kinetic) + list(interaction):
        if t.n_qubits != n:
            raise WidthMismatchError(f"term {t.string} has width {t.n_qubits}, layout has {n}")
    blocks = layout.blocks
    qft = (blocks["p1"], blocks["p2"])
    kin = sorted((PauliTerm(scale * t.coeff, t.string) for t in kinetic), key=lambda t: t.string)
    inter = sorted((PauliTerm(scale * t.coeff, t.string) for t in interaction), key=lambda t: t.string)
    return HamiltonianModel(n, tuple(kin), tuple(inter), qft, layout.N_perp)


def demo_lattice() -> tuple[LatticeSpec, EncodingLayout]:
    spec = LatticeSpec(N_perp=2, L_perp=5.0, N_par=1, L_par=1.0, fixed_p_plus=850.0, fixed_helicity=0.5)
    return spec, EncodingLayout.for_lattice(spec, omit_p_plus=True, omit_helicity=True)


def demo_fixture() -> HamiltonianModel:
    """Fixed demo Hamiltonian: K (x) T^0 + F^dag (W^{1-} (x) T^1) F, halved."""
    _, layout = demo_lattice()
    kinetic = [PauliTerm(c * DEMO_UNIT, s + "II") for s, c in DEMO_KINETIC.items()]
    # T^1 = (IX + ZX)/4 on the color block
    interaction = [PauliTerm(c * DEMO_UNIT / 4, s + cs) for s, c in DEMO_W1.items() for cs in ("IX", "ZX")]
    model = assemble(kinetic, interaction, layout)
    model.meta.update(source="fixture", m_quark=0.02, p_plus=850.0, layout=layout)
    return model


def l1_norm(model: HamiltonianModel) -> float:
    return float(sum(abs(t.coeff) for t in model.terms))


def resource_estimate(model: HamiltonianModel, K_r: int, r: int = 1) -> dict:
    """Qubit counts for the TTS circuit and the asymptotic gate-cost expressions."""
    if K_r < 1 or r < 1:
        raise ConfigurationError(f"need K_r >= 1 and r >= 1, got K_r={K_r}, r={r}")
    L = model.L
    if L == 0:
        raise ConfigurationError("model has no terms")
    n_sys = model.n_qubits
    log_l = bits_for(L)
    ancilla = K_r + K_r * log_l
    return {
        "system_qubits": n_sys,
        "ancilla_qubits": ancilla,
        "total_qubits": ancilla + n_sys,
        "L": L,
        "L1": model.L1,
        "L2": model.L2,
        "K_r": K_r,
        "r": r,
        "gate_count_per_step": f"O[K L (N_sys + log L) + N_sys^2] with K={K_r}, L={L}, N_sys={n_sys}",
        "gate_count_scale": r * K_r * L * (n_sys + log_l) + r * n_sys**2,
        "gate_count_total": (
            f"O[(Lambda x+) log(Lambda x+/eps)/loglog(Lambda x+/eps) * {L}*({n_sys} + log {L})"
            f" + (Lambda x+) * {n_sys}^2]"
        ),
    }
