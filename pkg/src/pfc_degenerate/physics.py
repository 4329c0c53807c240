"""Constitutive ingredients of the PFC model and the functionals built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .spectral import Grid, SpectralField, dealias_coeffs, pfc_symbol

POTENTIAL_KINDS = ("quartic_example", "derivation_form", "linear_test")
_KIND_CODE = {
    "quartic_example": kernels.QUARTIC,
    "derivation_form": kernels.DERIVATION,
    "linear_test": kernels.LINEAR,
}


@dataclass(frozen=True)
class PotentialSpec:
    """Homogeneous free energy density W and its growth metadata.

    ``quartic_example``: W(z) = (z-1)^4/4 - eps (z-1)^2/2.
    ``derivation_form``: W(z) = f0(z) + kappa gamma (z-1)^2/2 - kappa z^2/2 with
    f0 the quartic Taylor polynomial of z ln z - z about z = 1.
    ``linear_test``: W = 0; a fixture for the exactly solvable linear dynamics.
    It violates the lower growth bound on purpose.
    """

    kind: str = "quartic_example"
    epsilon: float = 0.2
    gamma: Optional[float] = None
    kappa: float = 1.0
    m: int = 2

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {POTENTIAL_KINDS}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kind == "derivation_form" and self.gamma is None:
            raise ValueError("derivation_form needs gamma")
        if not (isinstance(self.m, (int, np.integer)) and self.m > 1):
            raise ValueError(f"growth exponent m must be an integer > 1, got {self.m}")

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    def evaluate(self, z, order: int = 0):
        return potential_eval(self, z, order)


def potential_eval(spec: PotentialSpec, z, order: int = 0):
    """W (order 0), W' (order 1) or W'' (order 2) at ``z`` (scalar or array)."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    if spec.kind not in _KIND_CODE:
        raise ValueError(f"unknown potential kind {spec.kind!r}")
    gamma = 0.0 if spec.gamma is None else spec.gamma
    out = kernels.potential(np.asarray(z, dtype=np.float64), spec.code, order,
                            spec.epsilon, gamma, spec.kappa)
    return float(out) if np.ndim(z) == 0 else out


def f0(z):
    """Quartic Taylor polynomial of the ideal-gas density z ln z - z about z = 1."""
    s = np.asarray(z, dtype=np.float64) - 1.0
    return -1.0 + 0.5 * s**2 - s**3 / 6.0 + s**4 / 12.0


@dataclass(frozen=True)
class MobilityModel:
    """Degenerate mobility M, its cutoff M_theta and the matching entropy densities."""

    theta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")

    def M(self, z):
        return mobility(self, z, regularized=False)

    def M_theta(self, z):
        return mobility(self, z, regularized=True)

    def Phi(self, z):
        return entropy(self, z, regularized=False)

    def Phi_theta(self, z):
        return entropy(self, z, regularized=True)


def _scalar_or_array(z, out):
    return float(out) if np.ndim(z) == 0 else out


def mobility(model: MobilityModel, z, regularized: bool = False):
    """M(z) = max(z, 0), or the cutoff M_theta(z) = max(z, theta) when ``regularized``."""
    arr = np.asarray(z, dtype=np.float64)
    if regularized:
        if model.theta <= 0:
            raise ValueError("regularized mobility needs theta > 0")
        return _scalar_or_array(z, kernels.mobility_reg(arr, model.theta))
    return _scalar_or_array(z, np.where(arr > 0, arr, 0.0))


def entropy(model: MobilityModel, z, regularized: bool = False):
    """Entropy density with Phi'' = 1/M and Phi(1) = Phi'(1) = 0."""
    arr = np.asarray(z, dtype=np.float64)
    if regularized:
        if model.theta <= 0:
            raise ValueError("regularized entropy needs theta > 0")
        return _scalar_or_array(z, kernels.entropy_reg(arr, model.theta))
    if np.any(arr <= 0):
        raise ValueError("the unregularized entropy is defined only for z > 0")
    return _scalar_or_array(z, arr * np.log(arr) - arr + 1.0)


# --------------------------------------------------------------------------
# field functionals
# --------------------------------------------------------------------------

def chemical_potential_coeffs(grid: Grid, u_values, u_coeffs, spec: PotentialSpec,
                              kappa: float, dealias: bool = True):
    wp = grid.forward(kernels.potential(u_values, spec.code, 1, spec.epsilon,
                                        0.0 if spec.gamma is None else spec.gamma, spec.kappa))
    if dealias:
        wp = dealias_coeffs(grid, wp)
    return wp + pfc_symbol(grid, kappa) * u_coeffs


def chemical_potential(u: SpectralField, spec: PotentialSpec, kappa: float,
                       dealias: bool = True) -> SpectralField:
    """omega = dealias(W'(u)) + kappa (u + 2 lap u + bilap u)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    coeffs = chemical_potential_coeffs(u.grid, u.values, u.coeffs, spec, kappa, dealias)
    return SpectralField(u.grid, coeffs=coeffs)


def quadratic_energy(grid: Grid, u_coeffs, kappa: float) -> float:
    """kappa * integral of (u^2/2 - |grad u|^2 + |lap u|^2 / 2), by Parseval."""
    sym = (1.0 - grid.lam) ** 2
    return 0.5 * kappa * grid.volume * float(np.sum(grid.weights * sym * np.abs(u_coeffs) ** 2))


def free_energy_arrays(grid: Grid, u_values, u_coeffs, spec: PotentialSpec, kappa: float) -> float:
    gamma = 0.0 if spec.gamma is None else spec.gamma
    bulk = grid.cell * float(np.sum(kernels.potential(u_values, spec.code, 0,
                                                      spec.epsilon, gamma, spec.kappa)))
    return bulk + quadratic_energy(grid, u_coeffs, kappa)


def free_energy(u: SpectralField, spec: PotentialSpec, kappa: float) -> float:
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return free_energy_arrays(u.grid, u.values, u.coeffs, spec, kappa)


def constant_state_energy(grid: Grid, c: float, spec: PotentialSpec, kappa: float) -> float:
    return grid.volume * (potential_eval(spec, c, 0) + 0.5 * kappa * c * c)


def entropy_density_bound(theta: float) -> float:
    """Phi_theta(0) = 1 - theta/2, the largest value of Phi_theta on [0, theta]."""
    return 1.0 - 0.5 * theta

