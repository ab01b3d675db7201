"""
Space-time identities relating two potentials.

alessandrini_pair checks

    i <(U1_T - U2_T) f, g> = int_0^T int (V1 - V2) u1 conj(v2) dx dt

with u1 the forward solution for V1 and v2 the final-value solution for
conj(V2). The stationary relations pair states psi_j = exp(-i lambda^2 t) w_j,
where the second state must have been built from conj(V2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import trapezoid

import config
from model.grid import Field, inner, integrate
from model.norms import exponents, lp_norm, v_lambda_norm, x_norm_upper, xstar_norm
from model.potentials import Potential
from model.propagator import final_value_solve, initial_to_final, iterate
from model.stationary import Mode, StationaryState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlessandriniPair:
    lhs: complex
    rhs: complex

    @property
    def gap(self) -> float:
        denom = abs(self.lhs) + abs(self.rhs) + np.finfo(float).tiny
        return float(abs(self.lhs - self.rhs) / denom)


def _check_pair(*items) -> None:
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise ValueError(f"Grid mismatch: {item.grid} vs {grid}")


def alessandrini_pair(V1: Potential, V2: Potential, f: Field, g: Field, T: float, steps: int,
                      keep: int = 1) -> AlessandriniPair:
    """
    Only the final-value trajectory is stored; the forward solution for V1 is
    streamed and paired with it at the stored times. Time integration is the
    trapezoid rule, so `keep` must divide `steps`.
    """
    _check_pair(V1, V2, f, g)
    if steps % keep != 0:
        raise ValueError(f"keep = {keep} must divide steps = {steps}")
    try:
        v2 = final_value_solve(V2, g, T, steps, keep)
        difference = (V1.values - V2.values) * V1.grid.cell_volume
        integrand = []
        u1_final = None
        for j, _, u in iterate(V1, f, T, steps):
            if j % keep == 0:
                integrand.append(np.vdot(v2.frames[j // keep].values, difference * u))
            u1_final = u
        rhs = complex(trapezoid(np.array(integrand), v2.times))
        U2f = initial_to_final(V2, f, T, steps)
        lhs = 1j * inner(Field(V1.grid, u1_final) - U2f, g)
        pair = AlessandriniPair(lhs, rhs)
        logger.info(f"Alessandrini pair: steps={steps}, |lhs|={abs(lhs):.4e}, gap={pair.gap:.3e}")
        return pair
    except ValueError:
        raise
    except Exception as e:
        logger.error(f"Alessandrini pairing error: {str(e)}", exc_info=True)
        raise RuntimeError(f"Alessandrini pairing failed: {str(e)}")


# --------------------------------------------------
# Stationary relations
# --------------------------------------------------
def _check_states(V1: Potential, V2: Potential, s1: StationaryState, s2: StationaryState) -> None:
    _check_pair(V1, V2, s1.w0, s2.w0)
    if abs(s1.lam - s2.lam) > 1e-12 * max(s1.lam, s2.lam):
        raise ValueError(f"States have different energies: {s1.lam} vs {s2.lam}")


def _pairing(F: np.ndarray, a: Field, b: Field) -> complex:
    return integrate(Field(a.grid, F * a.values * np.conj(b.values)))


def stationary_orthogonality(V1: Potential, V2: Potential, s1: StationaryState, s2: StationaryState,
                             T: float) -> complex:
    """T int (V1 - V2) w1 conj(w2); both phases exp(-i lambda^2 t) cancel."""
    _check_states(V1, V2, s1, s2)
    return T * _pairing(V1.values - V2.values, s1.w, s2.w)


@dataclass(frozen=True)
class Decomposition:
    leading: complex
    rem1: complex
    rem2: complex
    rem3: complex

    @property
    def remainders(self) -> Tuple[complex, complex, complex]:
        return self.rem1, self.rem2, self.rem3

    @property
    def total(self) -> complex:
        return self.leading + self.rem1 + self.rem2 + self.rem3


def cancellation_decomposition(V1: Potential, V2: Potential, s1: StationaryState,
                               s2: StationaryState) -> Decomposition:
    """
    int F w1 conj(w2) split into the plane-wave term and the three terms
    carrying a correction: (w1^0, w2cor), (w1cor, w2^0), (w1cor, w2cor).
    The terms are per unit time.
    """
    _check_states(V1, V2, s1, s2)
    F = V1.values - V2.values
    return Decomposition(
        leading=_pairing(F, s1.w0, s2.w0),
        rem1=_pairing(F, s1.w0, s2.wcor),
        rem2=_pairing(F, s1.wcor, s2.w0),
        rem3=_pairing(F, s1.wcor, s2.wcor),
    )


def remainder_bounds(V1: Potential, V2: Potential, s1: StationaryState, s2: StationaryState,
                     mode: Mode = Mode.NONENDPOINT, q=None) -> Tuple[float, float, float]:
    """Hoelder bounds on |rem1|, |rem2|, |rem3| in the norms of the mode."""
    _check_states(V1, V2, s1, s2)
    F = Field(V1.grid, V1.values - V2.values)
    mode = Mode(mode)
    n = V1.grid.n
    if mode is Mode.ENDPOINT:
        lam = s1.lam
        xf = x_norm_upper(F, lam, n)
        x1 = xstar_norm(s1.wcor, lam, n)
        x2 = xstar_norm(s2.wcor, lam, n)
        return xf * x2, xf * x1, v_lambda_norm(F, lam) * x1 * x2
    table = exponents(n, V1.q if q is None else q)
    p, pc = table.p, table.p_conj
    c1 = lp_norm(s1.wcor, p)
    c2 = lp_norm(s2.wcor, p)
    Fp = lp_norm(F, pc)
    return Fp * c2, Fp * c1, lp_norm(F, table.q) * c1 * c2


def bias_budget(V1: Potential, s1: StationaryState, T: float, tol: float = config.NEUMANN_TOL) -> float:
    """T (C1 tol + C2 eps lambda) ||V1||_1."""
    return T * (config.BIAS_C1 * tol + config.BIAS_C2 * s1.cfg.eps * s1.lam) * V1.norms["1"]
