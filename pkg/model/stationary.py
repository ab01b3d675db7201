"""
Stationary states w = w0 + wcor with w0 = exp(-i lambda omega.x), built by
Neumann-series inversion of (Id - P V), plus residual and decay diagnostics.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field as PydanticField

import config
from model.grid import Field, band_limit, plane_wave
from model.norms import Exponent, as_exponent, format_exponent, lp_norm, v_lambda_norm, xstar_norm
from model.potentials import Potential
from model.propagator import default_steps, initial_to_final
from model.resolvent import ResolventConfig, apply_resolvent, helmholtz_apply
from utils.fitting import loglog_slope

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    NONENDPOINT = "nonendpoint"
    ENDPOINT = "endpoint"


class NormKind(str, Enum):
    LP = "Lp"
    XSTAR = "Xstar"


@dataclass(frozen=True)
class NormChoice:
    """Working norm of a Neumann iteration: L^p, or X_lambda* at the energy of the resolvent."""

    kind: NormKind
    p: Optional[Exponent] = None

    @classmethod
    def lp(cls, p) -> "NormChoice":
        return cls(NormKind.LP, as_exponent(p))

    @classmethod
    def xstar(cls) -> "NormChoice":
        return cls(NormKind.XSTAR)

    def measure(self, f: Field, lam: float) -> float:
        if self.kind is NormKind.XSTAR:
            return xstar_norm(f, lam, f.grid.n)
        return lp_norm(f, self.p)

    @property
    def label(self) -> str:
        if self.kind is NormKind.XSTAR:
            return self.kind.value
        return f"L{format_exponent(self.p)}"


class NeumannReport(BaseModel):
    iterations: int = PydanticField(..., description="Number of P V applications")
    contraction_estimate: float = PydanticField(..., description="Max successive term ratio over the tail")
    converged: bool
    final_increment: float = PydanticField(..., description="Norm of the last added term relative to the source")
    norm_used: str
    inverse_bound: float = PydanticField(..., description="1/(1 - contraction), infinite when not contracting")
    residual_norm: float = PydanticField(..., description="Relative fixed-point residual of the returned sum")


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: Optional[NeumannReport] = None, partial: Optional[list] = None):
        super().__init__(message)
        self.report = report
        self.partial = partial or []


def neumann_invert(V: Potential, cfg: ResolventConfig, rhs: Field, norm: NormChoice,
                   tol: float = config.NEUMANN_TOL,
                   max_iter: int = config.NEUMANN_MAX_ITER) -> Tuple[Field, NeumannReport]:
    """
    Sum rhs + (P V) rhs + (P V)^2 rhs + ... until a term falls below tol ||rhs||.

    The term that crosses the threshold is included. Non-convergence is
    reported through `converged`, never raised here.
    """
    if not tol > 0:
        raise ValueError(f"Neumann tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    if rhs.grid != V.grid or not rhs.is_spatial:
        raise ValueError("Neumann source must be a spatial field on the potential grid")
    lam = cfg.lam

    scale = norm.measure(rhs, lam)
    if scale == 0.0:
        report = NeumannReport(iterations=0, contraction_estimate=0.0, converged=True, final_increment=0.0,
                               norm_used=norm.label, inverse_bound=1.0, residual_norm=0.0)
        return Field.zeros(rhs.grid), report

    w = rhs
    term = rhs
    previous = scale
    ratios: List[float] = []
    size = scale
    iterations = 0
    for iterations in range(1, max_iter + 1):
        term = apply_resolvent(term * V.values, cfg)
        size = norm.measure(term, lam)
        ratios.append(size / previous)
        w = w + term
        if size < tol * scale or not math.isfinite(size):
            break
        previous = size

    contraction = max(ratios[-config.CONTRACTION_TAIL:])
    final_increment = size / scale
    converged = final_increment < tol and contraction < 1.0
    residual = w - rhs - apply_resolvent(w * V.values, cfg)
    report = NeumannReport(
        iterations=iterations,
        contraction_estimate=contraction,
        converged=converged,
        final_increment=final_increment,
        norm_used=norm.label,
        inverse_bound=1.0 / (1.0 - contraction) if contraction < 1.0 else math.inf,
        residual_norm=norm.measure(residual, lam) / scale,
    )
    if converged:
        logger.info(f"Neumann series converged: lambda={lam:g}, {iterations} iterations, "
                    f"contraction {contraction:.3e} in {norm.label}")
    else:
        logger.warning(f"Neumann series did not converge: lambda={lam:g}, {iterations} iterations, "
                       f"contraction {contraction:.3e}, last increment {final_increment:.3e}")
    return w, report


# --------------------------------------------------
# Stationary states
# --------------------------------------------------
@dataclass(frozen=True, eq=False)
class StationaryState:
    lam: float
    omega: Tuple[float, ...]
    w0: Field
    wcor: Field
    neumann: NeumannReport
    residual: float
    cfg: ResolventConfig
    mode: Mode

    @property
    def w(self) -> Field:
        return self.w0 + self.wcor

    @property
    def wavevector(self) -> np.ndarray:
        return self.lam * np.asarray(self.omega)


def _unit_direction(omega: Sequence[float], n: int) -> Tuple[float, ...]:
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if omega.size != n:
        raise ValueError(f"Direction must have {n} components, got {omega.size}")
    if abs(float(np.linalg.norm(omega)) - 1.0) > 1e-12:
        raise ValueError(f"Direction {omega.tolist()} is not a unit vector")
    return tuple(float(c) for c in omega)


def working_norm(V: Potential, mode: Mode) -> NormChoice:
    mode = Mode(mode)
    n = V.grid.n
    if mode is Mode.ENDPOINT:
        if n < 3 or V.q != Fraction(n, 2):
            raise ValueError(f"Endpoint mode needs n >= 3 and q = n/2, got n = {n}, q = {V.q}")
        return NormChoice.xstar()
    return NormChoice.lp(V.table.p)


def helmholtz_residual(s: StationaryState, V: Potential, cfg: Optional[ResolventConfig] = None) -> float:
    """||(Delta + lambda^2 + i eps lambda - V) w - i eps lambda w0||_2 / ||V w0||_2, band-limited."""
    cfg = s.cfg if cfg is None else cfg
    if s.w0.grid != V.grid:
        raise ValueError("State and potential live on different grids")
    defect = helmholtz_apply(s.w, cfg, V) - band_limit(s.w0) * cfg.absorption
    scale = lp_norm(s.w0 * V.values, 2)
    if scale == 0.0:
        scale = lp_norm(s.w0, 2)
    return lp_norm(defect, 2) / scale


def build_stationary_state(V: Potential, lam: float, omega: Sequence[float], mode: Mode = Mode.NONENDPOINT,
                           tol: float = config.NEUMANN_TOL, max_iter: int = config.NEUMANN_MAX_ITER,
                           eps: Optional[float] = None) -> StationaryState:
    mode = Mode(mode)
    omega = _unit_direction(omega, V.grid.n)
    norm = working_norm(V, mode)
    cfg = ResolventConfig(V.grid, lam, eps)
    w0 = plane_wave(V.grid, cfg.lam * np.asarray(omega))

    wcor, report = neumann_invert(V, cfg, apply_resolvent(w0 * V.values, cfg), norm, tol, max_iter)
    if not report.converged:
        raise ConvergenceError(
            f"Neumann series did not converge at lambda = {cfg.lam:g} after {report.iterations} "
            f"iterations (contraction {report.contraction_estimate:.3f}); lambda may lie below lambda_V",
            report,
        )
    state = StationaryState(cfg.lam, omega, w0, wcor, report, 0.0, cfg, mode)
    residual = helmholtz_residual(state, V, cfg)
    logger.debug(f"Stationary state lambda={cfg.lam:g}: residual {residual:.3e}")
    return StationaryState(cfg.lam, omega, w0, wcor, report, residual, cfg, mode)


# --------------------------------------------------
# Decay along a ladder
# --------------------------------------------------
class DecayRow(BaseModel):
    lam: float
    norm_value: float
    iterations: int
    contraction: float
    residual: float
    v_lambda: Optional[float] = None
    smallness_ratio: Optional[float] = None


@dataclass(frozen=True)
class DecayStudy:
    mode: Mode
    norm_used: str
    rows: Tuple[DecayRow, ...]
    slope: float
    smallness_slope: Optional[float] = None

    @property
    def slope_defined(self) -> bool:
        return math.isfinite(self.slope)


def _decay_row(V: Potential, lam: float, omega, mode: Mode, tol: float, max_iter: int) -> DecayRow:
    s = build_stationary_state(V, lam, omega, mode, tol, max_iter)
    norm = working_norm(V, mode)
    row = DecayRow(lam=s.lam, norm_value=norm.measure(s.wcor, s.lam), iterations=s.neumann.iterations,
                   contraction=s.neumann.contraction_estimate, residual=s.residual)
    if mode is Mode.ENDPOINT:
        vl = v_lambda_norm(V, s.lam)
        row.v_lambda = vl
        row.smallness_ratio = s.neumann.contraction_estimate / vl if vl > 0 else None
    logger.info(f"Decay rung lambda={s.lam:g}: |wcor|={row.norm_value:.4e}, iters={row.iterations}")
    return row


def decay_study(V: Potential, mode: Mode, lambdas: Sequence[float], omega: Sequence[float],
                tol: float = config.NEUMANN_TOL, max_iter: int = config.NEUMANN_MAX_ITER,
                threads: int = 1) -> DecayStudy:
    """
    Norm of wcor in the mode's working norm at each energy, with the log-log
    slope. The slope is NaN for the zero potential.
    """
    mode = Mode(mode)
    lambdas = [float(lam) for lam in lambdas]
    if len(lambdas) < 2:
        raise ValueError("A decay study needs at least two energies")
    rows: List[DecayRow] = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_decay_row, V, lam, omega, mode, tol, max_iter) for lam in lambdas]
        for lam, fut in zip(lambdas, futures):
            try:
                rows.append(fut.result())
            except ConvergenceError as e:
                logger.error(f"Decay study aborted at lambda={lam:g}: {str(e)}")
                raise ConvergenceError(str(e), e.report, partial=rows)

    slope = loglog_slope(lambdas, [r.norm_value for r in rows]) if not V.is_zero else float("nan")
    smallness_slope = None
    if mode is Mode.ENDPOINT and all(r.smallness_ratio for r in rows):
        smallness_slope = loglog_slope(lambdas, [r.smallness_ratio for r in rows])
    logger.info(f"Decay study ({mode.value}): slope {slope:.4f} over {len(rows)} energies")
    return DecayStudy(mode, working_norm(V, mode).label, tuple(rows), slope, smallness_slope)


# --------------------------------------------------
# Drift under numerical propagation
# --------------------------------------------------
class DriftReport(BaseModel):
    T: float
    steps: int
    distance: float = PydanticField(..., description="L2 distance of evolved and analytic states at T")
    absorption_bound: float = PydanticField(..., description="eps lambda T ||wcor||_2")
    scheme_error: float = PydanticField(..., description="distance minus the absorption bound, floored at 0")


def stationary_drift(s: StationaryState, V: Potential, T: float, steps: Optional[int] = None) -> DriftReport:
    """
    Evolve w = w0 + wcor numerically and compare with exp(-i lambda^2 T) w.

    w solves (Delta + lambda^2 - V) w = -i eps lambda wcor, so by Duhamel the
    distance is at most eps lambda T ||wcor||_2 plus the scheme error.
    """
    steps = default_steps(V, T) if steps is None else steps
    evolved = initial_to_final(V, s.w, T, steps)
    analytic = s.w * np.exp(-1j * s.lam ** 2 * T)
    distance = lp_norm(evolved - analytic, 2)
    bound = s.cfg.eps * s.lam * T * lp_norm(s.wcor, 2)
    logger.info(f"Stationary drift at T={T:g}: distance {distance:.3e}, absorption bound {bound:.3e}")
    return DriftReport(T=T, steps=steps, distance=distance, absorption_bound=bound,
                       scheme_error=max(distance - bound, 0.0))


__all__ = [
    "Mode",
    "NormChoice",
    "NeumannReport",
    "ConvergenceError",
    "StationaryState",
    "neumann_invert",
    "build_stationary_state",
    "helmholtz_residual",
    "decay_study",
    "DecayStudy",
    "DecayRow",
    "working_norm",
    "DriftReport",
    "stationary_drift",
]
