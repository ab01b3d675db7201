"""
The Helmholtz solution operator as a regularized Fourier multiplier,
Littlewood-Paley projections, and the resolvent estimate ratios.

P f has symbol 1/(lambda^2 - |xi|^2 + i eps lambda) on the band-limited
subspace, so (Delta + lambda^2 + i eps lambda) P f = band_limit(f) exactly.
The incoming branch (outgoing=False) flips the sign of the absorption.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

import config
from model.grid import Field, Grid, apply_multiplier, band_limit
from model.norms import as_exponent, conjugate_exponent, exponents, lp_norm, reciprocal
from utils.fitting import growth_factor, loglog_slope

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResolventConfig:
    grid: Grid
    lam: float
    eps: Optional[float] = None
    outgoing: bool = True

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"Energy lambda must be positive, got {self.lam}")
        eps = self.eps
        if eps is None:
            eps = config.EPSILON_FACTOR * self.lam * self.grid.dk
        if not eps > 0:
            raise ValueError(f"Absorption eps must be positive, got {eps}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "eps", float(eps))

    @property
    def absorption(self) -> complex:
        """The imaginary shift +-i eps lambda of lambda^2."""
        sign = 1.0 if self.outgoing else -1.0
        return 1j * sign * self.eps * self.lam

    def conjugate(self) -> "ResolventConfig":
        return ResolventConfig(self.grid, self.lam, self.eps, not self.outgoing)


@lru_cache(maxsize=64)
def _resolvent_symbol(grid: Grid, lam: float, shift: complex) -> np.ndarray:
    symbol = 1.0 / (lam ** 2 - grid.xi2 + shift)
    symbol = np.broadcast_to(symbol, grid.shape).copy()
    symbol[grid.nyquist_mask] = 0.0
    symbol.flags.writeable = False
    logger.debug(f"Built resolvent symbol: N={grid.N}, lambda={lam}, shift={shift}")
    return symbol


def resolvent_symbol(cfg: ResolventConfig) -> np.ndarray:
    return _resolvent_symbol(cfg.grid, cfg.lam, cfg.absorption)


def _check_grid(f: Field, cfg: ResolventConfig) -> None:
    if f.grid != cfg.grid:
        raise ValueError(f"Field grid {f.grid} does not match resolvent grid {cfg.grid}")


def apply_resolvent(f: Field, cfg: ResolventConfig) -> Field:
    _check_grid(f, cfg)
    return apply_multiplier(f, resolvent_symbol(cfg))


def helmholtz_apply(u: Field, cfg: ResolventConfig, V=None) -> Field:
    """Band-limited (Delta + lambda^2 + i eps lambda - V) u for a spatial u."""
    _check_grid(u, cfg)
    if not u.is_spatial:
        raise ValueError("helmholtz_apply expects a spatial field")
    g = cfg.grid
    out = apply_multiplier(u, np.broadcast_to(cfg.lam ** 2 - g.xi2 + cfg.absorption, g.shape))
    if V is not None:
        potential = V.field if hasattr(V, "field") else V
        out = out - band_limit(u * potential.values)
    return out


# --------------------------------------------------
# Littlewood-Paley pieces
# --------------------------------------------------
def _glue(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=float)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def phi(r) -> np.ndarray:
    """
    Radial bump: 1 on |x| <= 2, 0 on |x| >= 4, smooth in between.

    With s = (|x| - 2)/2 and psi(t) = exp(-1/t) for t > 0 (0 otherwise),
    phi = psi(1 - s) / (psi(1 - s) + psi(s)).
    """
    r = np.abs(np.asarray(r, dtype=float))
    s = 0.5 * (r - 2.0)
    a = _glue(1.0 - s)
    b = _glue(s)
    return a / (a + b)


class Band(str, Enum):
    BELOW = "below"
    ABOVE = "above"


def _radial(grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.sqrt(grid.xi2), grid.shape)


def lp_project(f: Field, lam: float, which: Band = Band.BELOW) -> Field:
    if not lam > 0:
        raise ValueError(f"Projection scale must be positive, got {lam}")
    low = phi(_radial(f.grid) / lam)
    return apply_multiplier(f, low if Band(which) is Band.BELOW else 1.0 - low)


def dyadic_block(f: Field, k: int) -> Field:
    r = _radial(f.grid)
    return apply_multiplier(f, phi(r / 2.0 ** (k + 1)) - phi(r / 2.0 ** k))


# --------------------------------------------------
# Estimate ratios
# --------------------------------------------------
def _check_source(f: Field, n: int) -> None:
    if f.grid.n != n:
        raise ValueError(f"Field dimension {f.grid.n} does not match n = {n}")
    if not np.any(f.values):
        raise ValueError("Estimate ratios need a nonzero source")


def krs_ratio(f: Field, lam: float, p=None, n: int = 3, eps: Optional[float] = None) -> float:
    """lambda^(2n(1/p - 1/p_n)) ||P f||_p / ||f||_p'."""
    _check_source(f, n)
    table = exponents(n, Fraction(n + 1, 2))
    p = table.q_n if p is None else as_exponent(p)
    if p == math.inf or p < table.q_n or (table.p_n != math.inf and p > table.p_n):
        raise ValueError(f"p = {p} outside [q_n, p_n] = [{table.q_n}, {table.p_n}] for n = {n}")
    power = float(2 * n * (reciprocal(p) - reciprocal(table.p_n)))
    u = apply_resolvent(f, ResolventConfig(f.grid, lam, eps))
    return lam ** power * lp_norm(u, p) / lp_norm(f, conjugate_exponent(p))


def refined_ratio(f: Field, lam: float, n: int, eps: Optional[float] = None) -> float:
    """lambda^(1/(n+1)) ||P f||_{p_n} / ||f||_{q_n'}."""
    if n < 3:
        raise ValueError(f"refined_ratio needs n >= 3, got n = {n}")
    _check_source(f, n)
    table = exponents(n, Fraction(n + 1, 2))
    u = apply_resolvent(f, ResolventConfig(f.grid, lam, eps))
    return lam ** (1.0 / (n + 1)) * lp_norm(u, table.p_n) / lp_norm(f, table.q_n_conj)


def epsilon_refinement(f: Field, lam: float, eps_values: Sequence[float]) -> np.ndarray:
    """L2 distances between the eps-regularized and eps = 0 resolvents, one per eps."""
    g = f.grid
    gap = np.abs(np.where(g.nyquist_mask, np.inf, lam ** 2 - g.xi2))
    if float(gap.min()) < 1e-9 * lam ** 2:
        raise ValueError(f"lambda = {lam} lies on a lattice shell; the eps = 0 multiplier is singular")
    exact = apply_multiplier(f, np.broadcast_to(1.0 / (lam ** 2 - g.xi2), g.shape))
    return np.array([
        lp_norm(apply_resolvent(f, ResolventConfig(g, lam, eps)) - exact, 2) for eps in eps_values
    ])


class Estimate(str, Enum):
    KRS = "krs"
    REFINED = "refined"


@dataclass(frozen=True)
class RatioStudy:
    """Ratios per draw (rows) and ladder rung (columns)."""

    estimate: Estimate
    lambdas: np.ndarray
    ratios: np.ndarray
    slopes: np.ndarray
    growth: np.ndarray

    @property
    def worst_slope(self) -> float:
        return float(np.nanmax(self.slopes))

    @property
    def worst_growth(self) -> float:
        return float(self.growth.max())


def ratio_study(fs: Sequence[Field], lambdas: Sequence[float], estimate: Estimate = Estimate.KRS,
                p=None, eps_factor: Optional[float] = None) -> RatioStudy:
    try:
        estimate = Estimate(estimate)
        lambdas = np.asarray(lambdas, dtype=float)
        if lambdas.size < 2:
            raise ValueError("A ratio study needs at least two energies")
        n = fs[0].grid.n
        ratios = np.empty((len(fs), lambdas.size))
        for i, f in enumerate(fs):
            for j, lam in enumerate(lambdas):
                eps = None if eps_factor is None else eps_factor * lam * f.grid.dk
                if estimate is Estimate.KRS:
                    ratios[i, j] = krs_ratio(f, lam, p, n, eps)
                else:
                    ratios[i, j] = refined_ratio(f, lam, n, eps)
        slopes = np.array([loglog_slope(lambdas, row) for row in ratios])
        growth = np.array([growth_factor(row) for row in ratios])
        logger.info(
            f"{estimate.value} ratio study: {len(fs)} draws x {lambdas.size} energies, "
            f"worst slope {np.nanmax(slopes):.3f}, worst growth {growth.max():.3f}"
        )
        return RatioStudy(estimate, lambdas, ratios, slopes, growth)
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Ratio study error: {str(e)}", exc_info=True)
        raise RuntimeError(f"Ratio study failed: {str(e)}")
