"""
Periodic-box discretization of R^n and the Fourier transform on it.

The box is [-L/2, L/2)^n sampled at x_j = -L/2 + j*h, h = L/N. Spectral
values approximate

    f_hat(xi) = (2*pi)^(-n/2) * integral f(x) exp(-i x.xi) dx

at xi_k = (2*pi/L)*k, k in {-N/2, ..., N/2-1}^n, with the quadrature weight
h^n folded in. Spectral arrays are kept in FFT (unshifted) index order. A
lattice mode exp(i kappa.x) maps to one coefficient of modulus
L^n (2*pi)^(-n/2), which is what Parseval with weights h^n and (2*pi/L)^n
requires.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.fft

import config

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex]


class Representation(str, Enum):
    SPATIAL = "spatial"
    SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid:
    """
    Periodic box with its dual frequency lattice.

    Parameters
    ----------
    n : int
        Dimension, 2 or 3.
    N : int
        Points per axis, an even power of two, at least 16.
    L : float
        Box side length.
    """

    n: int
    N: int
    L: float

    def __post_init__(self) -> None:
        if self.n not in config.SUPPORTED_DIMENSIONS:
            raise ValueError(f"Dimension must be one of {config.SUPPORTED_DIMENSIONS}, got {self.n}")
        if self.N < config.MIN_POINTS or self.N % 2 != 0:
            raise ValueError(f"N must be even and at least {config.MIN_POINTS}, got {self.N}")
        if self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"Box length L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def dk(self) -> float:
        """Spacing of the dual lattice, 2*pi/L."""
        return 2.0 * math.pi / self.L

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def volume(self) -> float:
        return self.L ** self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -0.5 * self.L + self.h * np.arange(self.N)

    @cached_property
    def axis_index(self) -> np.ndarray:
        """Integer lattice indices along one axis in FFT order."""
        return np.rint(np.fft.fftfreq(self.N) * self.N).astype(np.int64)

    @cached_property
    def coords(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij", sparse=True))

    @cached_property
    def freqs(self) -> Tuple[np.ndarray, ...]:
        xi = self.dk * self.axis_index
        return tuple(np.meshgrid(*([xi] * self.n), indexing="ij", sparse=True))

    @cached_property
    def radius2(self) -> np.ndarray:
        return sum(c ** 2 for c in self.coords)

    @cached_property
    def xi2(self) -> np.ndarray:
        return sum(k ** 2 for k in self.freqs)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the Nyquist shell: any coordinate index equal to -N/2."""
        on_axis = self.axis_index == -self.N // 2
        masks = np.meshgrid(*([on_axis] * self.n), indexing="ij", sparse=True)
        out = np.zeros(self.shape, dtype=bool)
        for m in masks:
            out = out | m
        return out

    @cached_property
    def _centering(self) -> np.ndarray:
        # exp(i xi_k L/2) per axis is (-1)^k
        sign = np.where(self.axis_index % 2 == 0, 1.0, -1.0)
        grids = np.meshgrid(*([sign] * self.n), indexing="ij", sparse=True)
        out = np.ones(self.shape)
        for g in grids:
            out = out * g
        return out

    @property
    def forward_scale(self) -> float:
        return (2.0 * math.pi) ** (-0.5 * self.n) * self.cell_volume

    @property
    def inverse_scale(self) -> float:
        return (2.0 * math.pi) ** (-0.5 * self.n) * (self.dk * self.N) ** self.n

    def lattice_index(self, kappa: Sequence[float], tol: float = 1e-9) -> Tuple[int, ...]:
        """Integer index of a lattice frequency; rejects off-lattice or Nyquist-reaching vectors."""
        kappa = np.asarray(kappa, dtype=float).reshape(-1)
        if kappa.size != self.n:
            raise ValueError(f"Frequency vector must have {self.n} components, got {kappa.size}")
        scaled = kappa / self.dk
        index = np.rint(scaled)
        if np.any(np.abs(scaled - index) > tol * np.maximum(1.0, np.abs(scaled))):
            raise ValueError(f"Frequency {kappa.tolist()} is not on the dual lattice (spacing {self.dk})")
        if np.any(np.abs(index) > self.N // 2 - 1):
            raise ValueError(f"Frequency {kappa.tolist()} reaches the Nyquist shell of N={self.N}")
        return tuple(int(i) for i in index)

    def refined(self) -> "Grid":
        return Grid(self.n, 2 * self.N, self.L)

    def coarsened(self) -> "Grid":
        return Grid(self.n, self.N // 2, self.L)

    def half_box(self) -> "Grid":
        """Grid of the central half-box at the same spacing (the even-sublattice dual)."""
        return Grid(self.n, self.N // 2, 0.5 * self.L)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a Grid, in spatial or spectral representation."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    rep: Representation = Representation.SPATIAL

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(f"Field values have shape {values.shape}, grid expects {self.grid.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rep", Representation(self.rep))

    @classmethod
    def zeros(cls, grid: Grid, rep: Representation = Representation.SPATIAL) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), rep)

    @property
    def is_spatial(self) -> bool:
        return self.rep is Representation.SPATIAL

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.rep)

    def conj(self) -> "Field":
        if self.is_spatial:
            return self.with_values(np.conj(self.values))
        # conj in space is F(-k)^* in frequency
        return fourier(inverse_fourier(self).conj())

    def _combine(self, other, op) -> "Field":
        if isinstance(other, Field):
            check_compatible(self, other)
            return self.with_values(op(self.values, other.values))
        return self.with_values(op(self.values, other))

    def __add__(self, other) -> "Field":
        return self._combine(other, np.add)

    def __sub__(self, other) -> "Field":
        return self._combine(other, np.subtract)

    def __mul__(self, other) -> "Field":
        return self._combine(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.with_values(-self.values)


def check_compatible(*fields: Field) -> None:
    first = fields[0]
    for f in fields[1:]:
        if f.grid != first.grid:
            raise ValueError(f"Grid mismatch: {f.grid} vs {first.grid}")
        if f.rep is not first.rep:
            raise ValueError(f"Representation mismatch: {f.rep.value} vs {first.rep.value}")


def make_grid(n: int, N: int, L: float) -> Grid:
    return Grid(int(n), int(N), float(L))


def fourier(f: Field) -> Field:
    if not f.is_spatial:
        raise ValueError("fourier expects a spatial field")
    g = f.grid
    values = g.forward_scale * g._centering * scipy.fft.fftn(f.values)
    return Field(g, values, Representation.SPECTRAL)


def inverse_fourier(F: Field) -> Field:
    if F.is_spatial:
        raise ValueError("inverse_fourier expects a spectral field")
    g = F.grid
    values = g.inverse_scale * scipy.fft.ifftn(g._centering * F.values)
    return Field(g, values, Representation.SPATIAL)


def apply_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    """Multiply by a spectral symbol on the band-limited subspace; returns f's representation."""
    g = f.grid
    symbol = np.where(g.nyquist_mask, 0.0, multiplier)
    if f.is_spatial:
        # scalars of the transform pair cancel
        return f.with_values(scipy.fft.ifftn(symbol * scipy.fft.fftn(f.values)))
    return f.with_values(symbol * f.values)


def band_limit(f: Field) -> Field:
    return apply_multiplier(f, np.ones(f.grid.shape))


def plane_wave(grid: Grid, kappa: Sequence[float]) -> Field:
    """exp(-i kappa.x) for a lattice frequency kappa."""
    grid.lattice_index(kappa)
    phase = sum(k * x for k, x in zip(np.asarray(kappa, dtype=float), grid.coords))
    return Field(grid, np.exp(-1j * np.broadcast_to(phase, grid.shape)))


def inner(f: Field, g: Field) -> complex:
    """Quadrature pairing h^n sum f conj(g) of two spatial fields."""
    check_compatible(f, g)
    if not f.is_spatial:
        raise ValueError("inner expects spatial fields")
    return complex(f.grid.cell_volume * np.vdot(g.values, f.values))


def integrate(f: Field) -> complex:
    if not f.is_spatial:
        raise ValueError("integrate expects a spatial field")
    return complex(f.grid.cell_volume * np.sum(f.values))


def _embed_slices(N_small: int, N_large: int) -> np.ndarray:
    k = np.rint(np.fft.fftfreq(N_small) * N_small).astype(np.int64)
    return np.mod(k, N_large)


def refine(f: Field) -> Field:
    """Spectral prolongation onto the 2N grid of the same box (Nyquist shell dropped)."""
    if not f.is_spatial:
        raise ValueError("refine expects a spatial field")
    coarse, fine = f.grid, f.grid.refined()
    spectrum = np.where(coarse.nyquist_mask, 0.0, scipy.fft.fftn(f.values))
    padded = np.zeros(fine.shape, dtype=np.complex128)
    idx = _embed_slices(coarse.N, fine.N)
    padded[np.ix_(*([idx] * coarse.n))] = spectrum
    values = scipy.fft.ifftn(padded) * (fine.N / coarse.N) ** coarse.n
    return Field(fine, values)


def coarsen(f: Field) -> Field:
    """Spectral truncation onto the N/2 grid of the same box."""
    if not f.is_spatial:
        raise ValueError("coarsen expects a spatial field")
    fine, coarse = f.grid, f.grid.coarsened()
    idx = _embed_slices(coarse.N, fine.N)
    spectrum = scipy.fft.fftn(f.values)[np.ix_(*([idx] * fine.n))]
    spectrum = np.where(coarse.nyquist_mask, 0.0, spectrum)
    values = scipy.fft.ifftn(spectrum) * (coarse.N / fine.N) ** fine.n
    return Field(coarse, values)


__all__ = [
    "Grid",
    "Field",
    "Representation",
    "make_grid",
    "fourier",
    "inverse_fourier",
    "apply_multiplier",
    "band_limit",
    "plane_wave",
    "inner",
    "integrate",
    "refine",
    "coarsen",
    "check_compatible",
]
