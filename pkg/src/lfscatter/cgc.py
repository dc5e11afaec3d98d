"""McLerran-Venugopalan color sources and the regularized transverse Poisson solve.

Arrays are indexed in register code order: axis position ``j`` holds site
``j - N_perp``. The solve is translation invariant on the periodic lattice, so
the code-order offset does not affect it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SingularModeError
from .lattice import LatticeSpec

__all__ = [
    "N_COLORS",
    "FieldParams",
    "ChargeDensity",
    "ColorField",
    "charge_variance",
    "sample_charge_density",
    "solve_poisson",
    "accumulate_field",
    "generate_field",
    "saturation_scale",
    "lattice_wavenumbers",
    "dump_csv",
]

N_COLORS = 8


@dataclass(frozen=True)
class FieldParams:
    g: float = 1.0
    g2mu: float = 0.407294  # GeV^{3/2}
    m_g: float = 0.1  # GeV
    L_eta: float = 50.0  # GeV^-1
    N_eta: int = 1
    m_quark: float = 0.02  # GeV
    seed: int = 0

    def __post_init__(self):
        if self.g2mu < 0 or not math.isfinite(self.g2mu):
            raise ConfigurationError(f"g2mu must be non-negative, got {self.g2mu}")
        if self.m_g < 0:
            raise ConfigurationError(f"m_g must be non-negative, got {self.m_g}")
        if not self.L_eta > 0:
            raise ConfigurationError(f"L_eta must be positive, got {self.L_eta}")
        if int(self.N_eta) != self.N_eta or self.N_eta < 1:
            raise ConfigurationError(f"N_eta must be a positive integer, got {self.N_eta}")
        if self.g == 0:
            raise ConfigurationError("coupling g must be nonzero")


@dataclass(frozen=True)
class ChargeDensity:
    """rho[a, slice, n1, n2] for color index a = 1..8 stored at position a - 1."""

    rho: np.ndarray

    @property
    def n_slices(self) -> int:
        return self.rho.shape[1]


@dataclass(frozen=True)
class ColorField:
    """Effective x+-independent field A_minus[a, n1, n2] (GeV), a = 1..8 at position a - 1."""

    A_minus: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.A_minus.shape[-1]


def charge_variance(params: FieldParams, spec: LatticeSpec) -> float:
    """Per-site, per-slice variance of rho.

    The continuum correlator g^2 mu^2 delta_ab delta^2(x - y) delta(x+ - y+) with
    delta functions replaced by 1/(dx+ a_r^2), dx+ = L_eta / N_eta.
    """
    g2mu2 = params.g2mu**2 / params.g**2
    return g2mu2 * params.N_eta / (params.L_eta * spec.a_r_perp**2)


def sample_charge_density(
    params: FieldParams, spec: LatticeSpec, rng: np.random.Generator | None = None
) -> ChargeDensity:
    if rng is None:
        rng = np.random.default_rng(params.seed)
    shape = (N_COLORS, params.N_eta, spec.n_sites, spec.n_sites)
    sigma = math.sqrt(charge_variance(params, spec))
    return ChargeDensity(sigma * rng.standard_normal(shape))


def lattice_wavenumbers(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Physical (k1, k2) grids in FFT order; k = q * a_p with q in [-N_perp, N_perp - 1]."""
    q = np.fft.fftfreq(spec.n_sites, d=1.0 / spec.n_sites)
    k = q * spec.a_p_perp
    return np.meshgrid(k, k, indexing="ij")


def solve_poisson(rho: ChargeDensity | np.ndarray, params: FieldParams, spec: LatticeSpec) -> np.ndarray:
    """Solve (m_g^2 - laplacian) A = rho per color and slice; returns A[a, slice, n1, n2].

    Modes with |k| > Lambda_UV are removed from the solution.
    """
    data = rho.rho if isinstance(rho, ChargeDensity) else np.asarray(rho, dtype=float)
    if data.shape[-2:] != (spec.n_sites, spec.n_sites):
        raise ConfigurationError(
            f"charge density grid {data.shape[-2:]} does not match lattice {spec.n_sites}x{spec.n_sites}"
        )
    k1, k2 = lattice_wavenumbers(spec)
    ksq = k1**2 + k2**2
    denom = params.m_g**2 + ksq
    keep = ksq <= spec.Lambda_UV**2 * (1 + 1e-12)
    rho_k = np.fft.fft2(data, axes=(-2, -1))
    if params.m_g == 0:
        zero_mode = np.abs(rho_k[..., 0, 0])
        if np.any(zero_mode > 1e-12 * max(1.0, float(np.abs(rho_k).max()))):
            raise SingularModeError("m_g = 0 with a nonzero k = 0 charge mode")
        denom = denom.copy()
        denom[0, 0] = 1.0
    green = np.where(keep, 1.0 / denom, 0.0)
    return np.fft.ifft2(rho_k * green, axes=(-2, -1)).real


def accumulate_field(slices: Sequence[np.ndarray] | np.ndarray, params: FieldParams | None = None) -> ColorField:
    """Average the per-slice fields over x+ (axis 1 of an [a, slice, n1, n2] array)."""
    if isinstance(slices, np.ndarray):
        if slices.ndim != 4 or slices.shape[1] == 0:
            raise ConfigurationError("expected a non-empty [a, slice, n1, n2] array")
        return ColorField(slices.mean(axis=1))
    if len(slices) == 0:
        raise ConfigurationError("no slices to accumulate")
    return ColorField(np.mean(np.stack(slices, axis=0), axis=0))


def generate_field(params: FieldParams, spec: LatticeSpec, rng: np.random.Generator | None = None) -> ColorField:
    rho = sample_charge_density(params, spec, rng)
    return accumulate_field(solve_poisson(rho, params, spec), params)


def saturation_scale(params: FieldParams) -> float:
    """Q_s^2 = (g^2 mu)^2 L_eta / (2 pi^2) in GeV^2."""
    return params.g2mu**2 * params.L_eta / (2 * math.pi**2)


def dump_csv(path: str | Path, array: np.ndarray) -> None:
    """Write an [a, slice, n1, n2] (or [a, n1, n2]) array as rows ``a, slice, n1, n2, value``.

    ``a`` is 1-based; ``n1, n2`` are lattice sites (not codes).
    """
    arr = np.asarray(array)
    if arr.ndim == 3:
        arr = arr[:, None]
    n_perp = arr.shape[-1] // 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "slice", "n1", "n2", "value"])
        for idx in np.ndindex(arr.shape):
            a, s, j1, j2 = idx
            w.writerow([a + 1, s, j1 - n_perp, j2 - n_perp, f"{arr[idx]:.12g}"])
