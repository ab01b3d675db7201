"""
Split-step spectral integration of i u_t = -Delta u + V u.

One Strang step of length tau is

    u <- exp(-i V tau/2) F^-1 exp(-i |xi|^2 tau) F exp(-i V tau/2) u

which is unitary for real V. The kinetic factor keeps the Nyquist shell.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Tuple, Union

import numpy as np
import scipy.fft

import config
from model.grid import Field, Grid, refine
from model.norms import Trajectory, lp_norm
from model.potentials import Potential

logger = logging.getLogger(__name__)


class SplitStepPropagator:
    """Strang stepper for one potential and one step length."""

    def __init__(self, V: Potential, tau: float):
        if not tau > 0:
            raise ValueError(f"Time step must be positive, got {tau}")
        self.grid = V.grid
        self.tau = float(tau)
        self._half_potential = np.exp(-0.5j * self.tau * V.values)
        self._kinetic = np.exp(-1j * self.tau * np.broadcast_to(self.grid.xi2, self.grid.shape))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = u * self._half_potential
        u = scipy.fft.ifftn(self._kinetic * scipy.fft.fftn(u))
        return u * self._half_potential


def _check_inputs(V: Potential, f: Field, T: float, steps: int) -> None:
    if f.grid != V.grid:
        raise ValueError(f"Initial state grid {f.grid} does not match potential grid {V.grid}")
    if not f.is_spatial:
        raise ValueError("Initial state must be a spatial field")
    if not T > 0:
        raise ValueError(f"Final time T must be positive, got {T}")
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")


def max_frequency2(grid: Grid) -> float:
    return float(grid.n * (0.5 * grid.N * grid.dk) ** 2)


def default_steps(V: Potential, T: float, grid: Grid = None) -> int:
    """Smallest step count with tau max|V| <= 0.1 and tau |xi_max|^2 <= pi/4."""
    grid = V.grid if grid is None else grid
    if not T > 0:
        raise ValueError(f"Final time T must be positive, got {T}")
    tau = config.MAX_KINETIC_PHASE / max_frequency2(grid)
    vmax = float(np.abs(V.values).max())
    if vmax > 0:
        tau = min(tau, config.MAX_POTENTIAL_PHASE / vmax)
    return max(1, math.ceil(T / tau - 1e-12))


def check_steps(V: Potential, T: float, steps: int) -> bool:
    tau = T / steps
    vmax = float(np.abs(V.values).max())
    ok = True
    if tau * vmax > config.MAX_POTENTIAL_PHASE:
        logger.warning(f"tau*max|V| = {tau * vmax:.3g} exceeds {config.MAX_POTENTIAL_PHASE}")
        ok = False
    if tau * max_frequency2(V.grid) > config.MAX_KINETIC_PHASE:
        logger.warning(f"tau*|xi_max|^2 = {tau * max_frequency2(V.grid):.3g} exceeds pi/4")
        ok = False
    return ok


def iterate(V: Potential, f: Field, T: float, steps: int) -> Iterator[Tuple[int, float, np.ndarray]]:
    """Yield (j, t_j, u_j) for j = 0..steps."""
    _check_inputs(V, f, T, steps)
    tau = T / steps
    step = SplitStepPropagator(V, tau)
    u = np.array(f.values)
    yield 0, 0.0, u
    for j in range(1, steps + 1):
        u = step(u)
        yield j, (T if j == steps else j * tau), u


def evolve(V: Potential, f: Field, T: float, steps: int, keep: int = 1) -> Trajectory:
    if keep < 1:
        raise ValueError(f"keep must be at least 1, got {keep}")
    check_steps(V, T, steps)
    times, frames = [], []
    for j, t, u in iterate(V, f, T, steps):
        if j % keep == 0 or j == steps:
            times.append(t)
            frames.append(Field(V.grid, u))
    logger.debug(f"Evolved to T={T:g} in {steps} steps, kept {len(frames)} frames")
    return Trajectory(V.grid, np.array(times), tuple(frames))


def initial_to_final(V: Potential, f: Field, T: float, steps: int) -> Field:
    if T == 0:
        return f
    final = None
    for _, _, u in iterate(V, f, T, steps):
        final = u
    return Field(V.grid, final)


def final_value_solve(V: Potential, g: Field, T: float, steps: int, keep: int = 1) -> Trajectory:
    """
    Solve i v_t = -Delta v + conj(V) v with v(T) = g.

    Evolves u from conj(g) with V and returns v(t) = conj(u(T - t)).
    """
    forward = evolve(V, g.conj(), T, steps, keep)
    times = T - forward.times[::-1]
    times[0] = 0.0
    frames = tuple(f.conj() for f in reversed(forward.frames))
    return Trajectory(V.grid, times, frames)


def free_propagate(f: Field, t: float) -> Field:
    """Exact free evolution exp(-i |xi|^2 t) on the whole lattice."""
    g = f.grid
    phase = np.exp(-1j * t * np.broadcast_to(g.xi2, g.shape))
    return f.with_values(scipy.fft.ifftn(phase * scipy.fft.fftn(f.values)))


def free_gaussian(grid: Grid, s: float, t: float) -> Field:
    """Closed-form free evolution of exp(-|x|^2 / (2 s^2))."""
    z = s ** 2 + 2j * t
    amplitude = (s ** 2 / z) ** (0.5 * grid.n)
    return Field(grid, amplitude * np.exp(-np.broadcast_to(grid.radius2, grid.shape) / (2.0 * z)))


def stationary_trajectory(s, T: float, samples: int) -> Trajectory:
    """Frames exp(-i lambda^2 t) (w0 + wcor) at `samples` equally spaced times in [0, T]."""
    if samples < 2:
        raise ValueError(f"samples must be at least 2, got {samples}")
    if not T > 0:
        raise ValueError(f"Final time T must be positive, got {T}")
    w = s.w
    times = np.linspace(0.0, T, samples)
    frames = tuple(w * np.exp(-1j * s.lam ** 2 * t) for t in times)
    return Trajectory(w.grid, times, frames)


# --------------------------------------------------
# Refinement
# --------------------------------------------------
Sampler = Union[Potential, Callable[[Grid], Potential]]
StateSampler = Union[Field, Callable[[Grid], Field]]


@dataclass(frozen=True)
class RefinementReport:
    points: Tuple[int, ...]
    steps: Tuple[int, ...]
    differences: Tuple[float, ...]

    @property
    def ratios(self) -> Tuple[float, ...]:
        d = self.differences
        return tuple(d[i] / d[i + 1] if d[i + 1] > 0 else math.inf for i in range(len(d) - 1))


def _sample_potential(V: Sampler, grid: Grid) -> Potential:
    if callable(V) and not isinstance(V, Potential):
        return V(grid)
    while V.grid.N < grid.N:
        prolonged = refine(V.field)
        values = prolonged.values.real if V.is_real else prolonged.values
        V = Potential(Field(prolonged.grid, values), V.q, allow_wrap=True)
    return V


def _sample_state(f: StateSampler, grid: Grid) -> Field:
    if callable(f) and not isinstance(f, Field):
        return f(grid)
    while f.grid.N < grid.N:
        f = refine(f)
    return f


def refinement_study(V: Sampler, f: StateSampler, T: float, steps: int, levels: int = 2) -> RefinementReport:
    """
    Final states on N, 2N, ... grids of the same box, steps scaled by 4 per
    level; reports L2 distances between successive levels on the finer grid.
    Callables are resampled on each grid; fixed fields are spectrally prolonged.
    """
    if levels < 2:
        raise ValueError(f"A refinement study needs at least 2 levels, got {levels}")
    concrete = [x for x in (V, f) if isinstance(x, (Potential, Field))]
    if not concrete:
        raise ValueError("Either the potential or the initial state must be sampled on a grid")
    base = concrete[0].grid
    grids = [base]
    for _ in range(levels - 1):
        grids.append(grids[-1].refined())
    finals, counts = [], []
    for level, grid in enumerate(grids):
        n_steps = steps * 4 ** level
        finals.append(initial_to_final(_sample_potential(V, grid), _sample_state(f, grid), T, n_steps))
        counts.append(n_steps)
        logger.info(f"Refinement level {level}: N={grid.N}, steps={n_steps}")
    differences = tuple(lp_norm(refine(coarse) - fine, 2) for coarse, fine in zip(finals[:-1], finals[1:]))
    return RefinementReport(tuple(g.N for g in grids), tuple(counts), differences)
