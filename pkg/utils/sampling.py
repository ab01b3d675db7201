import logging
from typing import Optional

import numpy as np

from model.grid import Field, Grid, band_limit

logger = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Philox-4x64 counter-based generator keyed by a 64-bit seed."""
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def random_smooth_field(grid: Grid, rng: np.random.Generator, bumps: int = 4,
                        width: Optional[float] = None) -> Field:
    """
    Sum of Gaussian bumps with random complex weights and centres inside the
    central quarter-box. Widths default to 8 grid spacings.
    """
    if bumps < 1:
        raise ValueError(f"Need at least one bump, got {bumps}")
    width = 8.0 * grid.h if width is None else float(width)
    values = np.zeros(grid.shape, dtype=np.complex128)
    for _ in range(bumps):
        centre = rng.uniform(-grid.L / 8, grid.L / 8, size=grid.n)
        weight = rng.standard_normal() + 1j * rng.standard_normal()
        r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, centre))
        values = values + weight * np.exp(-r2 / (2.0 * width ** 2))
    return Field(grid, values)


def random_band_limited_field(grid: Grid, rng: np.random.Generator) -> Field:
    """Gaussian white noise with the Nyquist shell removed."""
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return band_limit(Field(grid, values))
