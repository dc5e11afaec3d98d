"""Light-front quark scattering off a classical color field, simulated with
truncated-Taylor-series and product-formula evolution on a statevector engine."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # source checkout without install
    __version__ = "0.0.0"

from .errors import (
    ConfigurationError,
    EncodingError,
    LFScatterError,
    ProjectionError,
    SingularModeError,
    WidthMismatchError,
)
from .lattice import BasisLabel, Color, EncodingLayout, LatticeSpec, build_lattice, decode_basis, encode_basis
from .hamiltonian import HamiltonianModel, PauliTerm, assemble, demo_fixture, demo_lattice, l1_norm
from .statevector import StateVector, init_basis_state
from .observables import Trajectory

__all__ = [
    "__version__",
    "LFScatterError",
    "ConfigurationError",
    "EncodingError",
    "ProjectionError",
    "SingularModeError",
    "WidthMismatchError",
    "BasisLabel",
    "Color",
    "EncodingLayout",
    "LatticeSpec",
    "build_lattice",
    "encode_basis",
    "decode_basis",
    "HamiltonianModel",
    "PauliTerm",
    "assemble",
    "demo_fixture",
    "demo_lattice",
    "l1_norm",
    "StateVector",
    "init_basis_state",
    "Trajectory",
]
