"""
Potentials: sampled fields with integrability metadata, plus the factories
used by experiments and tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from fractions import Fraction
from typing import Dict, Optional, Sequence

import numpy as np

import config
from model.grid import Field, Grid
from model.norms import Exponent, ExponentTable, as_exponent, exponents, lp_norm

logger = logging.getLogger(__name__)


def _outside_half_box(grid: Grid) -> np.ndarray:
    quarter = 0.25 * grid.L
    mask = np.zeros(grid.shape, dtype=bool)
    for c in grid.coords:
        mask = mask | (np.abs(c) >= quarter)
    return mask


@dataclass(frozen=True, eq=False)
class Potential:
    """
    A spatial field V with declared exponent q.

    Unless `allow_wrap` is set, V must be negligible (relative to max|V|)
    outside the central half-box so that resolvent tails do not wrap around
    the periodic box.
    """

    field: Field
    q: Exponent
    allow_wrap: bool = False
    norms: Dict[str, float] = dc_field(init=False, repr=False, default_factory=dict)
    table: ExponentTable = dc_field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        if not self.field.is_spatial:
            raise ValueError("Potential values must be spatial")
        table = exponents(self.field.grid.n, self.q)
        object.__setattr__(self, "q", table.q)
        object.__setattr__(self, "table", table)
        if not self.allow_wrap:
            self._check_support()
        n = self.grid.n
        cached = {
            "1": lp_norm(self.field, 1),
            "q": lp_norm(self.field, table.q),
            "p_conj": lp_norm(self.field, table.p_conj),
            "n/2": lp_norm(self.field, Fraction(n, 2)),
            "(n+1)/2": lp_norm(self.field, Fraction(n + 1, 2)),
        }
        object.__setattr__(self, "norms", cached)

    def _check_support(self) -> None:
        a = np.abs(self.field.values)
        peak = float(a.max())
        if peak == 0.0:
            return
        leak = float(np.max(np.where(_outside_half_box(self.grid), a, 0.0)))
        if leak > config.SUPPORT_TOLERANCE * peak:
            raise ValueError(
                f"Potential is not supported in the central half-box: "
                f"max outside = {leak:.3e}, relative {leak / peak:.3e} > {config.SUPPORT_TOLERANCE}"
            )

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def is_zero(self) -> bool:
        return not np.any(self.field.values)

    @property
    def is_real(self) -> bool:
        return not np.any(self.field.values.imag)

    def conj(self) -> "Potential":
        return Potential(self.field.conj(), self.q, self.allow_wrap)

    def scaled(self, c: complex) -> "Potential":
        return Potential(self.field * c, self.q, self.allow_wrap)

    def __sub__(self, other: "Potential") -> "Potential":
        return Potential(self.field - other.field, self.q, self.allow_wrap or other.allow_wrap)


def from_field(f: Field, q, allow_wrap: bool = False) -> Potential:
    return Potential(f, as_exponent(q), allow_wrap)


def zero_potential(grid: Grid, q=None) -> Potential:
    if q is None:
        q = Fraction(grid.n + 1, 2)
    return Potential(Field.zeros(grid), as_exponent(q))


def _shifted_radius2(grid: Grid, center: Optional[Sequence[float]]) -> np.ndarray:
    if center is None:
        return np.broadcast_to(grid.radius2, grid.shape)
    center = np.asarray(center, dtype=float)
    return np.broadcast_to(sum((c - x0) ** 2 for c, x0 in zip(grid.coords, center)), grid.shape)


def gaussian_potential(grid: Grid, amplitude: complex, sigma: float, q, center=None) -> Potential:
    r2 = _shifted_radius2(grid, center)
    return Potential(Field(grid, amplitude * np.exp(-r2 / (2.0 * sigma ** 2))), as_exponent(q))


def gaussian_transform(grid: Grid, amplitude: complex, sigma: float, xi: Sequence[float], center=None) -> complex:
    """Closed-form transform a sigma^n exp(-sigma^2 |xi|^2 / 2) exp(-i xi.c) of gaussian_potential."""
    xi = np.asarray(xi, dtype=float)
    value = amplitude * sigma ** grid.n * math.exp(-0.5 * sigma ** 2 * float(xi @ xi))
    if center is not None:
        value *= np.exp(-1j * float(xi @ np.asarray(center, dtype=float)))
    return complex(value)


def bump_profile(r2: np.ndarray, radius: float) -> np.ndarray:
    """exp(1 - 1/(1 - r^2/R^2)) inside the ball, 0 outside; peak value 1."""
    s = r2 / radius ** 2
    out = np.zeros_like(s, dtype=float)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


def bump_potential(grid: Grid, amplitude: complex, radius: float, q, center=None) -> Potential:
    if radius > 0.25 * grid.L:
        raise ValueError(f"Bump radius {radius} exceeds the central half-box (L/4 = {0.25 * grid.L})")
    r2 = np.array(_shifted_radius2(grid, center))
    return Potential(Field(grid, amplitude * bump_profile(r2, radius)), as_exponent(q))


def singular_potential(grid: Grid, amplitude: complex, alpha: float, radius: float, q) -> Potential:
    """
    amplitude |x|^(-alpha) times a bump of the given radius.

    Needs alpha < n/q for L^q membership. The sample at the origin is taken
    at r = h/2.
    """
    q = as_exponent(q)
    if not alpha < grid.n / float(q):
        raise ValueError(f"|x|^(-{alpha}) is not in L^{q} for n = {grid.n}: need alpha < n/q")
    r2 = np.array(_shifted_radius2(grid, None))
    r = np.maximum(np.sqrt(r2), 0.5 * grid.h)
    values = amplitude * r ** (-alpha) * bump_profile(r2, radius)
    logger.info(f"Singular potential: alpha={alpha}, peak sample {np.abs(values).max():.3e}")
    return Potential(Field(grid, values), q)
