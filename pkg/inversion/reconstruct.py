"""
Recovery of the potential difference F = V1 - V2 from its Fourier transform.

For a target frequency xi on the even sublattice and a direction nu with
xi.nu = 0, the plane waves exp(-i lambda omega_j.x) with

    lambda omega_1 =  xi/2 + mu nu,    lambda omega_2 = -xi/2 + mu nu

are lattice modes, and int F w1^0 conj(w2^0) = (2 pi)^(n/2) F_hat(xi). The
stationary relation replaces the plane waves by full states, so the
estimate approaches F_hat(xi) as lambda grows. The recovered spectrum lives
on the even sublattice, which is the dual of the central half-box.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
from model.grid import Field, Grid, Representation, inner, integrate, inverse_fourier, plane_wave
from model.norms import exponents
from model.potentials import Potential
from model.propagator import default_steps, free_propagate, initial_to_final
from model.stationary import ConvergenceError, Mode, build_stationary_state
from inversion.orthogonality import cancellation_decomposition, stationary_orthogonality
from utils.fitting import loglog_slope, richardson

logger = logging.getLogger(__name__)

DataMap = Callable[[Field], Field]


# --------------------------------------------------
# Scattering geometry
# --------------------------------------------------
@dataclass(frozen=True)
class ScatteringConfig:
    """Frequency xi, rung m, and the two lattice directions it induces."""

    grid: Grid
    xi_index: Tuple[int, ...]
    m: int
    m_eff: int
    nu_index: Tuple[int, ...]
    k1: Tuple[int, ...]
    k2: Tuple[int, ...]

    @property
    def xi(self) -> np.ndarray:
        return self.grid.dk * np.asarray(self.xi_index, dtype=float)

    @property
    def nu(self) -> np.ndarray:
        v = np.asarray(self.nu_index, dtype=float)
        return v / np.linalg.norm(v)

    @property
    def mu(self) -> float:
        return self.m_eff * float(np.linalg.norm(self.nu_index)) * self.grid.dk

    @property
    def lam(self) -> float:
        half = 0.5 * np.asarray(self.xi_index, dtype=float)
        return self.grid.dk * math.sqrt(float(half @ half) + (self.mu / self.grid.dk) ** 2)

    @property
    def omega1(self) -> np.ndarray:
        return self.grid.dk * np.asarray(self.k1, dtype=float) / self.lam

    @property
    def omega2(self) -> np.ndarray:
        return self.grid.dk * np.asarray(self.k2, dtype=float) / self.lam


def _even_index(grid: Grid, xi: Sequence[float]) -> Tuple[int, ...]:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != grid.n:
        raise ValueError(f"Frequency must have {grid.n} components, got {xi.size}")
    scaled = xi / grid.dk
    index = np.rint(scaled)
    if np.any(np.abs(scaled - index) > 1e-9 * np.maximum(1.0, np.abs(scaled))):
        raise ValueError(f"xi = {xi.tolist()} is not on the dual lattice")
    index = index.astype(int)
    if np.any(index % 2):
        raise ValueError(f"xi = {xi.tolist()} is not on the even sublattice")
    if not np.any(index):
        raise ValueError("xi = 0 is not reached by the scheme; F_hat(0) is handled separately")
    return tuple(int(i) for i in index)


def orthogonal_direction(xi_index: Sequence[int]) -> Tuple[int, ...]:
    """
    Primitive integer vector orthogonal to xi: e_j for the first zero
    coordinate j, else (-b, a)/gcd in 2D and (-b, a, 0)/gcd in 3D.
    """
    n = len(xi_index)
    for j, c in enumerate(xi_index):
        if c == 0:
            return tuple(1 if i == j else 0 for i in range(n))
    a, b = xi_index[0], xi_index[1]
    g = math.gcd(a, b)
    nu = [-b // g, a // g] + [0] * (n - 2)
    return tuple(nu)


def scattering_vectors(xi: Sequence[float], m: int, grid: Grid) -> ScatteringConfig:
    if m < 1:
        raise ValueError(f"Rung multiplier m must be at least 1, got {m}")
    xi_index = _even_index(grid, xi)
    nu = orthogonal_direction(xi_index)
    m_eff = math.ceil(m / math.sqrt(sum(c * c for c in nu)) - 1e-12)
    half = np.asarray(xi_index) // 2
    shift = m_eff * np.asarray(nu)
    k1 = tuple(int(c) for c in half + shift)
    k2 = tuple(int(c) for c in -half + shift)
    limit = grid.N // 2 - 1
    if max(max(abs(c) for c in k1), max(abs(c) for c in k2)) > limit:
        raise ValueError(f"Rung m={m} for xi index {xi_index} reaches the Nyquist shell of N={grid.N}")
    return ScatteringConfig(grid, xi_index, m, m_eff, nu, k1, k2)


def xi_set(grid: Grid, band: float, symmetric: bool = True) -> List[Tuple[float, ...]]:
    """
    Even-lattice frequencies with 0 < |xi| <= band, sorted by index. With
    `symmetric`, only the representative whose first nonzero index is
    positive is kept.
    """
    if not band > 0:
        raise ValueError(f"Band must be positive, got {band}")
    reach = min(int(band / grid.dk), grid.N // 2 - 2)
    half_reach = reach // 2
    axis = np.arange(-half_reach, half_reach + 1)
    out = []
    for idx in np.array(np.meshgrid(*([axis] * grid.n), indexing="ij")).reshape(grid.n, -1).T:
        k = 2 * idx
        if not np.any(k) or grid.dk * float(np.linalg.norm(k)) > band * (1 + 1e-12):
            continue
        if symmetric and k[np.flatnonzero(k)[0]] < 0:
            continue
        out.append(tuple(float(c) for c in grid.dk * k))
    if not out:
        raise ValueError(f"No even-lattice frequency lies in 0 < |xi| <= {band}")
    return out


def direct_transform(F: Field, xi: Sequence[float]) -> complex:
    """(2 pi)^(-n/2) int F exp(-i xi.x) by quadrature."""
    return (2.0 * math.pi) ** (-0.5 * F.grid.n) * integrate(F * plane_wave(F.grid, xi).values)


def decay_rate(n: int, q, mode: Mode) -> float:
    if Mode(mode) is Mode.ENDPOINT:
        return 2.0 / (n + 1)
    return float(exponents(n, q).decay_rate)


# --------------------------------------------------
# Estimates
# --------------------------------------------------
@dataclass(frozen=True)
class RungEstimate:
    cfg: ScatteringConfig
    fhat: complex
    remainders: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    note: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.note is None

    @property
    def lam(self) -> float:
        return self.cfg.lam


def fhat_direct(V1: Potential, V2: Potential, cfgs: Sequence[ScatteringConfig],
                tol: float = config.NEUMANN_TOL, mode: Mode = Mode.NONENDPOINT,
                V2_conj: Optional[Potential] = None) -> List[RungEstimate]:
    """
    F_hat estimate per rung, (2 pi)^(-n/2) int F w1 conj(w2), with the
    remainder magnitudes in the same units. Rungs whose Neumann series does
    not converge carry a note and a NaN estimate.
    """
    V2_conj = V2.conj() if V2_conj is None else V2_conj
    scale = (2.0 * math.pi) ** (-0.5 * V1.grid.n)
    out = []
    for cfg in cfgs:
        try:
            s1 = build_stationary_state(V1, cfg.lam, cfg.omega1, mode, tol)
            s2 = build_stationary_state(V2_conj, cfg.lam, cfg.omega2, mode, tol)
        except ConvergenceError as e:
            logger.warning(f"Skipping rung m={cfg.m} for xi index {cfg.xi_index}: {str(e)}")
            out.append(RungEstimate(cfg, complex(math.nan, math.nan), note=str(e)))
            continue
        value = scale * stationary_orthogonality(V1, V2, s1, s2, 1.0)
        parts = cancellation_decomposition(V1, V2, s1, s2)
        out.append(RungEstimate(cfg, value, tuple(scale * abs(r) for r in parts.remainders)))
    return out


def data_map(V: Potential, T: float, steps: Optional[int] = None) -> DataMap:
    """Initial-to-final map of V realized by the split-step propagator."""
    steps = default_steps(V, T) if steps is None else steps
    return lambda f: initial_to_final(V, f, T, steps)


def fhat_from_data(U: DataMap, cfg: ScatteringConfig, T: float, reference: Optional[DataMap] = None) -> complex:
    """
    i / (T (2 pi)^(n/2)) int (U f - U0 f) conj(g), f = exp(-i lambda omega_1.x),
    g = exp(-i lambda^2 T) exp(-i lambda omega_2.x). U0 defaults to the exact free map.
    """
    if not T > 0:
        raise ValueError(f"Final time T must be positive, got {T}")
    grid = cfg.grid
    reference = (lambda h: free_propagate(h, T)) if reference is None else reference
    f = input_wave(cfg)
    g = plane_wave(grid, grid.dk * np.asarray(cfg.k2, dtype=float)) * np.exp(-1j * cfg.lam ** 2 * T)
    Uf = U(f)
    if Uf.grid != grid:
        raise ValueError(f"Data map returned a field on {Uf.grid}, expected {grid}")
    return 1j / (T * (2.0 * math.pi) ** (0.5 * grid.n)) * inner(Uf - reference(f), g)


def input_wave(cfg: ScatteringConfig) -> Field:
    """The initial state exp(-i lambda omega_1.x) that fhat_from_data feeds to U."""
    return plane_wave(cfg.grid, cfg.grid.dk * np.asarray(cfg.k1, dtype=float))


class RecordedDataMap:
    """
    U_T known only on recorded inputs, each paired with its final state.

    Calling it on a field that matches no recorded input raises ValueError.
    """

    def __init__(self, pairs: Sequence[Tuple[Field, Field]], T: float, atol: float = 1e-12):
        if not pairs:
            raise ValueError("A recorded data map needs at least one input/output pair")
        if not T > 0:
            raise ValueError(f"Final time T must be positive, got {T}")
        grid = pairs[0][0].grid
        for f, u in pairs:
            if f.grid != grid or u.grid != grid:
                raise ValueError(f"Recorded fields must share one grid, expected {grid}")
            if not (f.is_spatial and u.is_spatial):
                raise ValueError("Recorded fields must be spatial")
        self.pairs = tuple(pairs)
        self.T = float(T)
        self.grid = grid
        self.atol = atol

    def __len__(self) -> int:
        return len(self.pairs)

    def __call__(self, f: Field) -> Field:
        if f.grid == self.grid:
            for inp, out in self.pairs:
                if np.allclose(inp.values, f.values, rtol=0.0, atol=self.atol):
                    return out
        raise ValueError("No recorded final state for this input; record the band and ladder used here")


def record_data(U: DataMap, grid: Grid, xis: Sequence[Sequence[float]], ladder: Sequence[int],
                T: float) -> RecordedDataMap:
    """Run U on every distinct input wave that a reconstruction over (xis, ladder) asks for."""
    ladder = sorted(int(m) for m in ladder)
    inputs: Dict[Tuple[int, ...], ScatteringConfig] = {}
    for xi in xis:
        for cfg in rung_configs(grid, xi, ladder):
            inputs.setdefault(cfg.k1, cfg)
    pairs = []
    for k1 in sorted(inputs):
        f = input_wave(inputs[k1])
        pairs.append((f, U(f)))
    logger.info(f"Recorded {len(pairs)} input waves over {len(xis)} frequencies, ladder {tuple(ladder)}")
    return RecordedDataMap(pairs, T)


# --------------------------------------------------
# Reconstruction
# --------------------------------------------------
@dataclass
class ReconstructionReport:
    mode: Mode
    extrapolated: bool
    ladder: Tuple[int, ...]
    estimates: Dict[Tuple[int, ...], List[RungEstimate]]
    selected: Dict[Tuple[int, ...], complex]
    slopes: Dict[Tuple[int, ...], float]
    V_rec: Field
    rung_errors: List[float] = field(default_factory=list)
    error: Optional[float] = None
    monotone_fraction: Optional[float] = None
    skipped: List[Tuple[Tuple[int, ...], int, str]] = field(default_factory=list)
    holes: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def top_rung_error(self) -> Optional[float]:
        """Error of the top-rung estimates alone, before any extrapolation."""
        return self.rung_errors[-1] if self.rung_errors else None


def rung_configs(grid: Grid, xi: Sequence[float], ladder: Sequence[int],
                 skipped: Optional[list] = None) -> List[ScatteringConfig]:
    """Configurations along the ladder with distinct m_eff; rungs past the Nyquist shell go to `skipped`."""
    skipped = [] if skipped is None else skipped
    cfgs: List[ScatteringConfig] = []
    for m in ladder:
        try:
            cfg = scattering_vectors(xi, m, grid)
        except ValueError as e:
            skipped.append((_even_index(grid, xi), m, str(e)))
            logger.warning(str(e))
            continue
        if cfgs and cfg.m_eff == cfgs[-1].m_eff:
            logger.debug(f"Rung m={m} repeats m_eff={cfg.m_eff} for xi index {cfg.xi_index}")
            continue
        cfgs.append(cfg)
    return cfgs


def check_band(xi: Sequence[float], cfgs: Sequence[ScatteringConfig]) -> None:
    """|xi| must stay within BAND_FACTOR * 2 lambda of the top rung."""
    if not cfgs:
        return
    top = cfgs[-1]
    size = float(np.linalg.norm(np.asarray(xi, dtype=float)))
    if size > 2.0 * config.BAND_FACTOR * top.lam * (1 + 1e-12):
        raise ValueError(f"|xi| = {size:g} exceeds the resolvable band {2.0 * config.BAND_FACTOR:g} lambda = "
                         f"{2.0 * config.BAND_FACTOR * top.lam:g} of rung m={top.m}; raise the ladder")


def _central_block(F: Field) -> np.ndarray:
    N = F.grid.N
    window = slice(N // 4, 3 * N // 4)
    return np.array(F.values[(window,) * F.grid.n])


def _assemble(half: Grid, spectrum: Dict[Tuple[int, ...], complex], real: bool, zero: Optional[complex]) -> Field:
    values = np.zeros(half.shape, dtype=np.complex128)
    for index, value in spectrum.items():
        k = tuple(c // 2 for c in index)
        values[k] = value
        if real:
            values[tuple(-c for c in k)] = np.conj(value)
    if zero is not None:
        values[(0,) * half.n] = zero
    return inverse_fourier(Field(half, values, Representation.SPECTRAL))


def _relative_error(V_rec: Field, truth: Optional[np.ndarray]) -> Optional[float]:
    if truth is None:
        return None
    scale = float(np.linalg.norm(truth))
    if scale == 0.0:
        return float(np.linalg.norm(V_rec.values))
    return float(np.linalg.norm(V_rec.values - truth) / scale)


def _value_at(rungs: List[RungEstimate], m: int) -> Optional[complex]:
    usable = [r for r in rungs if r.ok and r.cfg.m <= m]
    return usable[-1].fhat if usable else None


def recover_potential(source: Union[Tuple[Potential, Potential], DataMap], xis: Sequence[Sequence[float]],
                      ladder: Sequence[int], mode: Mode = Mode.NONENDPOINT, extrapolate: bool = False,
                      truth: Optional[Potential] = None, T: float = 1.0, tol: float = config.NEUMANN_TOL,
                      grid: Optional[Grid] = None, real: Optional[bool] = None, q=None,
                      threads: int = 1) -> ReconstructionReport:
    """
    Estimate F_hat on `xis` along the rung ladder and invert on the half-box.

    `source` is either (V1, V2), using stationary states, or a data map
    realizing U_T of an unknown potential with V2 = 0.
    Frequencies beyond BAND_FACTOR * 2 lambda of their top rung are refused.
    """
    mode = Mode(mode)
    ladder = tuple(sorted(int(m) for m in ladder))
    if not xis:
        raise ValueError("Empty frequency set")
    if not ladder:
        raise ValueError("Empty rung ladder")

    direct = isinstance(source, tuple)
    if direct:
        V1, V2 = source
        if V1.grid != V2.grid:
            raise ValueError(f"Grid mismatch: {V1.grid} vs {V2.grid}")
        grid = V1.grid
        truth = V1 - V2 if truth is None else truth
        q = V1.q if q is None else q
        V2_conj = V2.conj()
    else:
        grid = getattr(source, "grid", None) if grid is None else grid
        if grid is None:
            raise ValueError("Data-mode reconstruction needs the grid of the data map")
    if truth is not None and truth.grid != grid:
        raise ValueError(f"Ground truth lives on {truth.grid}, expected {grid}")
    if real is None:
        real = truth.is_real if truth is not None else True
    q = Fraction(grid.n + 1, 2) if q is None else q
    delta = decay_rate(grid.n, q, mode)
    skipped: list = []
    plans = [rung_configs(grid, xi, ladder, skipped) for xi in xis]
    for xi, cfgs in zip(xis, plans):
        check_band(xi, cfgs)

    def estimate(cfgs) -> List[RungEstimate]:
        if direct:
            return fhat_direct(V1, V2, cfgs, tol, mode, V2_conj)
        return [RungEstimate(cfg, fhat_from_data(source, cfg, T)) for cfg in cfgs]

    try:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = list(pool.map(estimate, plans))
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Reconstruction error: {str(e)}", exc_info=True)
        raise RuntimeError(f"Reconstruction failed: {str(e)}")

    estimates: Dict[Tuple[int, ...], List[RungEstimate]] = {}
    for xi, rungs in zip(xis, results):
        estimates[_even_index(grid, xi)] = rungs
    skipped.sort()

    truth_spectrum = {}
    if truth is not None:
        truth_spectrum = {k: direct_transform(truth.field, grid.dk * np.asarray(k, dtype=float)) for k in estimates}

    selected: Dict[Tuple[int, ...], complex] = {}
    slopes: Dict[Tuple[int, ...], float] = {}
    holes: List[Tuple[int, ...]] = []
    for k, rungs in estimates.items():
        usable = [r for r in rungs if r.ok]
        if not usable:
            holes.append(k)
            continue
        value = usable[-1].fhat
        if extrapolate and len(usable) >= 2:
            lo, hi = usable[-2], usable[-1]
            value = richardson(lo.fhat, lo.lam, hi.fhat, hi.lam, delta)
        selected[k] = value
        if k in truth_spectrum and len(usable) >= 2:
            slopes[k] = loglog_slope([r.lam for r in usable], [abs(r.fhat - truth_spectrum[k]) for r in usable])
        else:
            slopes[k] = math.nan

    half = grid.half_box()
    zero = None
    truth_block = None
    if truth is not None:
        zero = (2.0 * math.pi) ** (-0.5 * grid.n) * integrate(truth.field)
        truth_block = _central_block(truth.field)
    else:
        holes.append((0,) * grid.n)

    V_rec = _assemble(half, selected, real, zero)
    rung_errors = []
    if truth_block is not None:
        for m in ladder:
            level = {k: v for k, v in ((k, _value_at(r, m)) for k, r in estimates.items()) if v is not None}
            rung_errors.append(_relative_error(_assemble(half, level, real, zero), truth_block))

    monotone = None
    if truth_spectrum:
        eligible = decreasing = 0
        for k, rungs in estimates.items():
            errs = [abs(r.fhat - truth_spectrum[k]) for r in rungs if r.ok]
            if len(errs) < 2:
                continue
            eligible += 1
            decreasing += all(b < a for a, b in zip(errs, errs[1:]))
        monotone = decreasing / eligible if eligible else None

    report = ReconstructionReport(
        mode=mode, extrapolated=extrapolate, ladder=ladder, estimates=estimates, selected=selected,
        slopes=slopes, V_rec=V_rec, rung_errors=rung_errors, error=_relative_error(V_rec, truth_block),
        monotone_fraction=monotone, skipped=skipped, holes=holes,
    )
    logger.info(f"Reconstruction over {len(estimates)} frequencies, ladder {ladder}: "
                f"error {report.error}, monotone fraction {monotone}")
    return report
