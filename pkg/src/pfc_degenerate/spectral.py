"""Fourier pseudospectral discretization of the periodic box [0, 2pi]^d.

Fields are held as real collocation samples on the uniform grid and as
half-spectrum coefficients from a real FFT.  Coefficients are normalised so
that the zero mode equals the mean of the samples.  Odd-order derivatives
drop the Nyquist plane (its wavenumber sign is ambiguous on a real field);
even-order operators keep it with lambda = (n/2)^2.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.fft

from . import _accel

_MIN_N = 8
_MAX_N = 1024


class Grid:
    """Uniform periodic grid with ``n`` points per axis in ``dim`` dimensions."""

    def __init__(self, dim: int, n: int):
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        if not isinstance(n, (int, np.integer)) or n % 2 != 0:
            raise ValueError(f"n must be an even integer, got {n}")
        if not _MIN_N <= n <= _MAX_N:
            raise ValueError(f"n must lie in [{_MIN_N}, {_MAX_N}], got {n}")
        self.dim = int(dim)
        self.n = int(n)
        self.shape = (self.n,) * self.dim
        self.size = self.n**self.dim
        self.volume = (2.0 * math.pi) ** self.dim
        self.spacing = 2.0 * math.pi / self.n
        self.cell = self.spacing**self.dim

        full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        half = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        axes = [full] * (self.dim - 1) + [half]
        self.spectral_shape = tuple(len(a) for a in axes)

        ks = []
        ks_odd = []
        for axis, k in enumerate(axes):
            shape = [1] * self.dim
            shape[axis] = len(k)
            kk = k.reshape(shape).astype(np.float64)
            ks.append(kk)
            odd = kk.copy()
            odd[np.abs(odd) == self.n // 2] = 0.0
            ks_odd.append(odd)
        self._k = tuple(ks)
        self._k_odd = tuple(ks_odd)

        lam = np.zeros(self.spectral_shape)
        for kk in ks:
            lam = lam + kk**2
        self.lam = lam

        cutoff = self.n // 3
        mask = np.ones(self.spectral_shape, dtype=bool)
        for kk in ks:
            mask &= np.abs(kk) <= cutoff
        self.dealias_mask = mask
        self.dealias_cutoff = cutoff

        # Parseval weights for the half spectrum: interior columns of the
        # last axis stand for themselves and their conjugate partner.
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        self.weights = w

        for arr in (self.lam, self.dealias_mask, self.weights, *self._k, *self._k_odd):
            arr.setflags(write=False)

    def __repr__(self):
        return f"Grid(dim={self.dim}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.dim, self.n) == (other.dim, other.n)

    def __hash__(self):
        return hash((self.dim, self.n))

    def __reduce__(self):
        return (Grid, (self.dim, self.n))

    # -- tables in full FFT ordering --------------------------------------

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumber vectors, shape ``(dim, n, ..., n)`` in FFT ordering."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        return np.stack(np.meshgrid(*([k] * self.dim), indexing="ij"))

    @property
    def eigenvalues(self) -> np.ndarray:
        """lambda = |k|^2 for every mode, full FFT ordering."""
        return (self.wavenumbers**2).sum(axis=0)

    def coordinates(self):
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    # -- raw array transforms ----------------------------------------------

    def forward(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.rfftn(values, norm="forward", workers=_accel.threads())

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.irfftn(coeffs, s=self.shape, norm="forward", workers=_accel.threads())

    def derivative_symbols(self):
        """``i k_j`` per axis, Nyquist plane zeroed."""
        return tuple(1j * k for k in self._k_odd)


def make_grid(dim: int, n: int) -> Grid:
    return Grid(dim, n)


class SpectralField:
    """A real scalar field on ``grid`` with lazily synchronised samples and coefficients."""

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: Grid, values=None, coeffs=None):
        if (values is None) == (coeffs is None):
            raise ValueError("provide exactly one of values or coeffs")
        self.grid = grid
        self._values = None
        self._coeffs = None
        if values is not None:
            values = np.array(values, dtype=np.float64)
            if values.shape != grid.shape:
                raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
            if not np.all(np.isfinite(values)):
                raise ValueError("field values must be finite")
            values.setflags(write=False)
            self._values = values
        else:
            coeffs = np.array(coeffs, dtype=np.complex128)
            if coeffs.shape != grid.spectral_shape:
                raise ValueError(
                    f"coeffs shape {coeffs.shape} does not match grid {grid.spectral_shape}"
                )
            coeffs.setflags(write=False)
            self._coeffs = coeffs

    @classmethod
    def from_function(cls, grid: Grid, func) -> "SpectralField":
        return cls(grid, values=func(*grid.coordinates()))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = self.grid.inverse(self._coeffs)
            v.setflags(write=False)
            self._values = v
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            c = self.grid.forward(self._values)
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    def mean(self) -> float:
        return float(self.values.mean())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, values=self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, values=self.values - other.values)

    def __mul__(self, scalar):
        return SpectralField(self.grid, values=self.values * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpectralField({self.grid!r})"


def _check_same_grid(a: SpectralField, b: SpectralField):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid!r} vs {b.grid!r}")


def _coerce(u: SpectralField) -> SpectralField:
    if not isinstance(u, SpectralField):
        raise TypeError(f"expected SpectralField, got {type(u).__name__}")
    return u


def transform(field: SpectralField) -> SpectralField:
    """Return ``field`` with its spectral coefficients computed from its samples."""
    field = _coerce(field)
    return SpectralField(field.grid, coeffs=field.grid.forward(field.values))


def inverse_transform(field: SpectralField) -> SpectralField:
    """Return ``field`` with its samples recomputed from its coefficients."""
    field = _coerce(field)
    return SpectralField(field.grid, values=field.grid.inverse(field.coeffs))


def laplacian(u: SpectralField) -> SpectralField:
    u = _coerce(u)
    return SpectralField(u.grid, coeffs=-u.grid.lam * u.coeffs)


def biharmonic(u: SpectralField) -> SpectralField:
    u = _coerce(u)
    return SpectralField(u.grid, coeffs=u.grid.lam**2 * u.coeffs)


def gradient(u: SpectralField) -> list[SpectralField]:
    u = _coerce(u)
    return [SpectralField(u.grid, coeffs=ik * u.coeffs) for ik in u.grid.derivative_symbols()]


def divergence(v: Sequence[SpectralField]) -> SpectralField:
    if len(v) == 0:
        raise ValueError("divergence needs one component per axis")
    grid = v[0].grid
    if len(v) != grid.dim:
        raise ValueError(f"expected {grid.dim} components, got {len(v)}")
    out = np.zeros(grid.spectral_shape, dtype=np.complex128)
    for comp, ik in zip(v, grid.derivative_symbols()):
        _check_same_grid(v[0], comp)
        out += ik * comp.coeffs
    out.flat[0] = 0.0
    return SpectralField(grid, coeffs=out)


def pfc_symbol(grid: Grid, kappa: float) -> np.ndarray:
    """kappa (1 - lambda)^2 on the half spectrum."""
    return kappa * (1.0 - grid.lam) ** 2


def apply_pfc_symbol(u: SpectralField, kappa: float) -> SpectralField:
    """kappa (u + 2 lap u + bilap u), applied as a Fourier multiplier."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    u = _coerce(u)
    return SpectralField(u.grid, coeffs=pfc_symbol(u.grid, kappa) * u.coeffs)


def dealias_coeffs(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return np.where(grid.dealias_mask, coeffs, 0.0)


def dealias(u: SpectralField) -> SpectralField:
    """2/3-rule projection: zero every mode with an axis wavenumber above n // 3."""
    u = _coerce(u)
    return SpectralField(u.grid, coeffs=dealias_coeffs(u.grid, u.coeffs))


def inner_product(u: SpectralField, v: SpectralField) -> float:
    """Trapezoid (collocation) quadrature of u v over the box."""
    _check_same_grid(_coerce(u), _coerce(v))
    return float(u.grid.cell * np.sum(u.values * v.values))


def spectral_inner_product(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Integral of the product of two real fields given by half-spectrum coefficients."""
    return float(grid.volume * np.sum(grid.weights * (a.conj() * b).real))
