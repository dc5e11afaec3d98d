"""Lattice discretization of the light-front basis and its compact register encoding.

Register order (most significant qubit first)::

    [p_plus | p1 | p2 | helicity | color]

Transverse sites ``q in [-N_perp, N_perp - 1]`` are stored as ``q + N_perp`` in
binary, the longitudinal site as ``ceil(q_plus) - 1``, helicity ``-1/2 -> 0`` and
``+1/2 -> 1``, colors Red/Green/Blue as ``00/01/10``. Code ``11`` is reserved.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigurationError, EncodingError

__all__ = [
    "Color",
    "LatticeSpec",
    "BasisLabel",
    "EncodingLayout",
    "build_lattice",
    "encode_basis",
    "decode_basis",
    "site_to_momentum",
    "site_to_coordinate",
    "qubit_count",
    "bits_for",
]


def bits_for(n_states: int) -> int:
    """Number of qubits needed to hold ``n_states`` codes (0 for a single state)."""
    if n_states < 1:
        raise ConfigurationError(f"need at least one state, got {n_states}")
    return (n_states - 1).bit_length()


class Color(enum.IntEnum):
    RED = 0
    GREEN = 1
    BLUE = 2

    @classmethod
    def parse(cls, value: "Color | str | int") -> "Color":
        if isinstance(value, Color):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ConfigurationError(f"unknown color {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class LatticeSpec:
    """Transverse and longitudinal lattice geometry (lengths in GeV^-1, momenta in GeV)."""

    N_perp: int
    L_perp: float
    N_par: int = 1
    L_par: float = 1.0
    fixed_p_plus: float | None = None
    fixed_helicity: float | None = None

    @property
    def a_r_perp(self) -> float:
        return self.L_perp / self.N_perp

    @property
    def a_p_perp(self) -> float:
        return math.pi / self.L_perp

    @property
    def a_p_par(self) -> float:
        return math.pi / self.L_par

    @property
    def Lambda_UV(self) -> float:
        return math.pi * self.N_perp / self.L_perp

    @property
    def Lambda_IR(self) -> float:
        return math.pi / self.L_perp

    @property
    def n_sites(self) -> int:
        """Sites per transverse axis (2 N_perp)."""
        return 2 * self.N_perp

    def sites(self) -> range:
        return range(-self.N_perp, self.N_perp)

    def check_site(self, q: int) -> None:
        if not (-self.N_perp <= q < self.N_perp) or int(q) != q:
            raise EncodingError(
                f"transverse site {q} outside [{-self.N_perp}, {self.N_perp - 1}]"
            )


def build_lattice(
    N_perp: int,
    L_perp: float,
    N_par: int = 1,
    L_par: float = 1.0,
    fixed_p_plus: float | None = None,
    fixed_helicity: float | None = None,
) -> LatticeSpec:
    if int(N_perp) != N_perp or N_perp < 1:
        raise ConfigurationError(f"N_perp must be a positive integer, got {N_perp}")
    if int(N_par) != N_par or N_par < 1:
        raise ConfigurationError(f"N_par must be a positive integer, got {N_par}")
    if not (L_perp > 0 and math.isfinite(L_perp)):
        raise ConfigurationError(f"L_perp must be positive, got {L_perp}")
    if not (L_par > 0 and math.isfinite(L_par)):
        raise ConfigurationError(f"L_par must be positive, got {L_par}")
    if fixed_p_plus is not None and fixed_p_plus <= 0:
        raise ConfigurationError(f"fixed p+ must be positive, got {fixed_p_plus}")
    if fixed_helicity is not None and fixed_helicity not in (-0.5, 0.5):
        raise ConfigurationError(f"helicity must be +-1/2, got {fixed_helicity}")
    return LatticeSpec(int(N_perp), float(L_perp), int(N_par), float(L_par), fixed_p_plus, fixed_helicity)


@dataclass(frozen=True)
class BasisLabel:
    q1: int
    q2: int
    color: Color = Color.RED
    helicity: float = 0.5
    q_plus: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "color", Color.parse(self.color))


@dataclass(frozen=True)
class EncodingLayout:
    """Register blocks for one lattice; fixed degrees of freedom may drop their block.

    ``fixed_q_plus`` and ``fixed_helicity`` are the values reported for omitted
    blocks when decoding.
    """

    N_perp: int
    N_par: int = 1
    omit_p_plus: bool = False
    omit_helicity: bool = False
    fixed_q_plus: float = 0.5
    fixed_helicity: float = 0.5

    @classmethod
    def for_lattice(cls, spec: LatticeSpec, omit_p_plus: bool = False, omit_helicity: bool = False,
                    fixed_q_plus: float = 0.5, fixed_helicity: float = 0.5) -> "EncodingLayout":
        return cls(spec.N_perp, spec.N_par, omit_p_plus, omit_helicity, fixed_q_plus, fixed_helicity)

    @property
    def widths(self) -> dict[str, int]:
        transverse = bits_for(2 * self.N_perp)
        return {
            "p_plus": 0 if self.omit_p_plus else bits_for(self.N_par),
            "p1": transverse,
            "p2": transverse,
            "helicity": 0 if self.omit_helicity else 1,
            "color": 2,
        }

    @property
    def blocks(self) -> dict[str, tuple[int, int]]:
        """Block name -> (first qubit, width), qubit 0 being the leftmost character."""
        out = {}
        start = 0
        for name, w in self.widths.items():
            out[name] = (start, w)
            start += w
        return out

    @property
    def n_qubits(self) -> int:
        return sum(self.widths.values())

    @property
    def dimension(self) -> int:
        return 1 << self.n_qubits

    def field(self, index: int, name: str) -> int:
        """Integer code stored in block ``name`` of basis index ``index``."""
        start, w = self.blocks[name]
        shift = self.n_qubits - start - w
        return (index >> shift) & ((1 << w) - 1)


def _to_bits(code: int, width: int) -> str:
    return format(code, f"0{width}b") if width else ""


def encode_basis(label: BasisLabel, layout: EncodingLayout) -> str:
    w = layout.widths
    n = layout.N_perp
    for q in (label.q1, label.q2):
        if int(q) != q or not (-n <= q < n):
            raise EncodingError(f"transverse site {q} outside [{-n}, {n - 1}]")
    if label.color not in (Color.RED, Color.GREEN, Color.BLUE):
        raise EncodingError(f"invalid color {label.color!r}")
    parts = []
    if w["p_plus"] or not layout.omit_p_plus:
        qp = Fraction(label.q_plus).limit_denominator(2)
        if qp.denominator != 2 or qp <= 0:
            raise EncodingError(f"q+ must be a positive half-integer, got {label.q_plus}")
        code = math.ceil(qp) - 1
        if code >= layout.N_par:
            raise EncodingError(f"q+ = {label.q_plus} exceeds N_par = {layout.N_par}")
        parts.append(_to_bits(code, w["p_plus"]))
    elif label.q_plus != layout.fixed_q_plus:
        raise EncodingError(f"q+ is fixed at {layout.fixed_q_plus}, got {label.q_plus}")
    parts.append(_to_bits(int(label.q1) + n, w["p1"]))
    parts.append(_to_bits(int(label.q2) + n, w["p2"]))
    if not layout.omit_helicity:
        if label.helicity not in (-0.5, 0.5):
            raise EncodingError(f"helicity must be +-1/2, got {label.helicity}")
        parts.append("1" if label.helicity > 0 else "0")
    elif label.helicity != layout.fixed_helicity:
        raise EncodingError(f"helicity is fixed at {layout.fixed_helicity}, got {label.helicity}")
    parts.append(_to_bits(int(label.color), 2))
    return "".join(parts)


def decode_basis(bits: str, layout: EncodingLayout) -> BasisLabel:
    if len(bits) != layout.n_qubits or set(bits) - {"0", "1"}:
        raise EncodingError(f"expected {layout.n_qubits} binary digits, got {bits!r}")
    n = layout.N_perp
    chunks = {name: bits[s:s + w] for name, (s, w) in layout.blocks.items()}

    def code(name: str) -> int:
        return int(chunks[name], 2) if chunks[name] else 0

    if layout.omit_p_plus:
        q_plus = layout.fixed_q_plus
    else:
        c = code("p_plus")
        if c >= layout.N_par:
            raise EncodingError(f"longitudinal code {c} unused for N_par = {layout.N_par}")
        q_plus = c + 0.5
    q1, q2 = code("p1") - n, code("p2") - n
    if q1 >= n or q2 >= n:
        raise EncodingError(f"transverse code outside lattice in {bits!r}")
    helicity = layout.fixed_helicity if layout.omit_helicity else (0.5 if chunks["helicity"] == "1" else -0.5)
    c = code("color")
    if c == 3:
        raise EncodingError(f"unused color code '11' in {bits!r}")
    return BasisLabel(q1=q1, q2=q2, color=Color(c), helicity=helicity, q_plus=q_plus)


def site_to_momentum(q: int, spec: LatticeSpec) -> float:
    spec.check_site(q)
    return q * spec.a_p_perp


def site_to_coordinate(n: int, spec: LatticeSpec) -> float:
    spec.check_site(n)
    return n * spec.a_r_perp


def qubit_count(spec: LatticeSpec, layout: EncodingLayout | None = None) -> int:
    """System register width: 2*ceil(log2 2N_perp) + ceil(log2 N_par) + 3, minus omitted blocks."""
    if layout is None:
        layout = EncodingLayout.for_lattice(spec)
    return layout.n_qubits
