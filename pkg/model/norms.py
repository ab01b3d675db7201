"""
Exponent arithmetic and the norm functionals used by the estimates.

All spatial norms carry the quadrature weight h^n; time integrals use the
trapezoid rule on a trajectory's stored times. Exponents are exact
`Fraction`s, with `math.inf` for infinite ones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

import config
from model.grid import Field, Grid

logger = logging.getLogger(__name__)

Exponent = Union[Fraction, float]

ADMISSIBILITY_RULE = "q > 1 if n = 2 and q >= n/2 if n >= 3"


def as_exponent(p) -> Exponent:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, (int, np.integer)):
        return Fraction(int(p))
    if isinstance(p, str) and p.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(p, float) and math.isinf(p):
        return math.inf
    return Fraction(str(p))


def reciprocal(p: Exponent) -> Fraction:
    return Fraction(0) if p == math.inf else 1 / Fraction(p)


def from_reciprocal(inv: Fraction) -> Exponent:
    return math.inf if inv == 0 else 1 / inv


def conjugate_exponent(p) -> Exponent:
    """Hoelder conjugate p' with 1/p + 1/p' = 1."""
    p = as_exponent(p)
    if p != math.inf and p < 1:
        raise ValueError(f"Exponent must be at least 1, got {p}")
    return from_reciprocal(1 - reciprocal(p))


def holder_partner(q) -> Exponent:
    """The p with 1/q + 2/p = 1."""
    q = as_exponent(q)
    if q == math.inf or q <= 1:
        raise ValueError(f"Hoelder partner needs 1 < q < inf, got {q}")
    return from_reciprocal((1 - reciprocal(q)) / 2)


@dataclass(frozen=True)
class ExponentTable:
    n: int
    q_n: Exponent
    p_n: Exponent
    q: Exponent
    p: Exponent
    r: Exponent

    @property
    def q_n_conj(self) -> Exponent:
        return conjugate_exponent(self.q_n)

    @property
    def p_n_conj(self) -> Exponent:
        return conjugate_exponent(self.p_n)

    @property
    def p_conj(self) -> Exponent:
        return conjugate_exponent(self.p)

    @property
    def r_conj(self) -> Exponent:
        return conjugate_exponent(self.r)

    @property
    def endpoint(self) -> bool:
        return self.n >= 3 and self.q == Fraction(self.n, 2)

    @property
    def decay_rate(self) -> Fraction:
        """n(2/n - 1/q): the lambda-decay of the non-endpoint estimates."""
        return self.n * (Fraction(2, self.n) - reciprocal(self.q))

    def as_row(self) -> dict:
        return {"n": self.n, "q_n": self.q_n, "p_n": self.p_n, "q": self.q, "p": self.p, "r": self.r}


def exponents(n: int, q) -> ExponentTable:
    if n not in config.SUPPORTED_DIMENSIONS:
        raise ValueError(f"Dimension must be one of {config.SUPPORTED_DIMENSIONS}, got {n}")
    q = as_exponent(q)
    if q == math.inf:
        q_admissible = True
    elif n == 2:
        q_admissible = q > 1
    else:
        q_admissible = q >= Fraction(n, 2)
    if not q_admissible:
        raise ValueError(f"q = {q} is not admissible for n = {n}: {ADMISSIBILITY_RULE}")

    cap = Fraction(n + 1, 2)
    if q > cap:
        logger.info(f"Clamping q = {q} to (n+1)/2 = {cap}")
        q = cap

    q_n = from_reciprocal(Fraction(1, 2) - Fraction(1, n + 1))
    p_n = from_reciprocal(Fraction(1, 2) - Fraction(1, n))
    p = holder_partner(q)
    r = from_reciprocal(n * (Fraction(1, 2) - reciprocal(p)) / 2)
    if (n, r, p) == (2, 2, math.inf):
        raise ValueError("The Strichartz pair (n, r, p) = (2, 2, inf) is excluded")
    return ExponentTable(n=n, q_n=q_n, p_n=p_n, q=q, p=p, r=r)


def format_exponent(p: Exponent) -> str:
    return "inf" if p == math.inf else str(p)


# --------------------------------------------------
# Trajectories
# --------------------------------------------------
@dataclass(frozen=True, eq=False)
class Trajectory:
    """Spatial frames of a time-dependent solution on one grid."""

    grid: Grid
    times: np.ndarray = field(repr=False)
    frames: Tuple[Field, ...] = field(repr=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        frames = tuple(self.frames)
        if len(frames) == 0:
            raise ValueError("Trajectory needs at least one frame")
        if times.shape != (len(frames),):
            raise ValueError(f"{len(frames)} frames but {times.size} times")
        if times[0] != 0.0:
            raise ValueError(f"Trajectory must start at t = 0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing")
        for f in frames:
            if f.grid != self.grid or not f.is_spatial:
                raise ValueError("Trajectory frames must be spatial fields on the trajectory grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frames", frames)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> Field:
        return self.frames[-1]

    def __len__(self) -> int:
        return len(self.frames)

    def map(self, fn) -> "Trajectory":
        return Trajectory(self.grid, self.times, tuple(fn(f) for f in self.frames))


# --------------------------------------------------
# Norms
# --------------------------------------------------
def _field_of(obj) -> Field:
    return obj.field if hasattr(obj, "field") and isinstance(obj.field, Field) else obj


def lp_norm(f, p) -> float:
    f = _field_of(f)
    if not f.is_spatial:
        raise ValueError("lp_norm expects a spatial field")
    p = as_exponent(p)
    if p != math.inf and p < 1:
        raise ValueError(f"Exponent must be at least 1, got {p}")
    a = np.abs(f.values)
    peak = float(a.max())
    if peak == 0.0:
        return 0.0
    if p == math.inf:
        return peak
    pf = float(p)
    return peak * float(f.grid.cell_volume * np.sum((a / peak) ** pf)) ** (1.0 / pf)


def mixed_norm(u: Trajectory, r, p) -> float:
    """(int_0^T ||u(t)||_p^r dt)^(1/r), sup over frames when r is infinite."""
    if len(u) == 0:
        raise ValueError("mixed_norm of an empty trajectory")
    r = as_exponent(r)
    values = np.array([lp_norm(f, p) for f in u.frames])
    if r == math.inf:
        return float(values.max())
    rf = float(r)
    peak = float(values.max())
    if peak == 0.0 or len(u) == 1:
        return 0.0
    return peak * float(trapezoid((values / peak) ** rf, u.times)) ** (1.0 / rf)


def intersection_norm(f, p1, p2) -> float:
    return max(lp_norm(f, p1), lp_norm(f, p2))


def _check_energy(lam: float) -> None:
    if not lam > 0:
        raise ValueError(f"Energy lambda must be positive, got {lam}")


def xstar_norm(f, lam: float, n: int) -> float:
    """max(lambda^(1/(n+1)) ||f||_{q_n}, ||f||_{p_n})."""
    _check_energy(lam)
    table = exponents(n, Fraction(n + 1, 2))
    return max(lam ** (1.0 / (n + 1)) * lp_norm(f, table.q_n), lp_norm(f, table.p_n))


def _threshold_exponents(levels: int) -> list:
    return sorted({Fraction(a, b) for b in range(1, levels + 1) for a in range(0, b + 1)})


def x_norm_upper(f, lam: float, n: int, levels: int = config.X_NORM_LEVELS) -> float:
    """
    Upper bound on the X_lambda norm by level-set splittings.

    Every threshold tau gives the admissible splitting g = f 1{|f| > tau},
    h = f 1{|f| <= tau} with objective lambda^(-1/(n+1)) ||g||_{q_n'} +
    ||h||_{p_n'}. Thresholds are max|f| (min|f|/max|f|)^t for the reduced
    fractions t = a/b, b <= levels, plus tau = 0; the sets are nested, so the
    bound never increases with `levels`.
    """
    _check_energy(lam)
    if levels < 1:
        raise ValueError(f"levels must be positive, got {levels}")
    f = _field_of(f)
    table = exponents(n, Fraction(n + 1, 2))
    qc, pc = float(table.q_n_conj), float(table.p_n_conj)
    a = np.sort(np.abs(f.values).ravel())
    if a[-1] == 0.0:
        return 0.0
    top = float(a[-1])
    a = a / top
    w = f.grid.cell_volume
    cum_q = np.concatenate(([0.0], np.cumsum(a ** qc)))
    cum_p = np.concatenate(([0.0], np.cumsum(a ** pc)))

    floor = float(a[a > 0].min())
    taus = [floor ** float(t) for t in _threshold_exponents(levels)] + [0.0]
    idx = np.searchsorted(a, np.array(taus), side="right")
    g_part = (w * np.maximum(cum_q[-1] - cum_q[idx], 0.0)) ** (1.0 / qc)
    h_part = (w * cum_p[idx]) ** (1.0 / pc)
    objective = lam ** (-1.0 / (n + 1)) * g_part + h_part
    return top * float(objective.min())


def v_lambda_norm(V, lam: float) -> float:
    """
    ||V 1_E||_{n/2} + lambda^(-2/(n+1)) ||V 1_{E^c}||_{(n+1)/2} with
    E = {|V| > lambda ||V||_{n/2}}; zero for the zero potential.
    """
    _check_energy(lam)
    f = _field_of(V)
    n = f.grid.n
    if n < 3:
        raise ValueError(f"v_lambda_norm needs n >= 3, got n = {n}")
    scale = lp_norm(f, Fraction(n, 2))
    if scale == 0.0:
        return 0.0
    inside = np.abs(f.values) > lam * scale
    near = f.with_values(np.where(inside, f.values, 0.0))
    far = f.with_values(np.where(inside, 0.0, f.values))
    return lp_norm(near, Fraction(n, 2)) + lam ** (-2.0 / (n + 1)) * lp_norm(far, Fraction(n + 1, 2))


# --------------------------------------------------
# Hoelder and Strichartz checks
# --------------------------------------------------
def holder_check(V, u: Field, v: Field, q) -> Tuple[float, float]:
    """(|int V u v|, ||V||_q ||u||_p ||v||_p) with 1/q + 2/p = 1."""
    V = _field_of(V)
    p = holder_partner(q)
    lhs = abs(V.grid.cell_volume * np.sum(V.values * u.values * v.values))
    return float(lhs), lp_norm(V, q) * lp_norm(u, p) * lp_norm(v, p)


def strichartz_norm(u: Trajectory, n: int, q) -> float:
    table = exponents(n, q)
    return mixed_norm(u, table.r, table.p)


def strichartz_holder_check(V, u: Trajectory, q) -> Tuple[float, float]:
    """(||V u||_{L^{r'} L^{p'}}, T^(1/r' - 1/r) ||V||_q ||u||_{L^r L^p})."""
    V = _field_of(V)
    table = exponents(V.grid.n, q)
    Vu = u.map(lambda f: f * V.values)
    lhs = mixed_norm(Vu, table.r_conj, table.p_conj)
    power = float(reciprocal(table.r_conj) - reciprocal(table.r))
    rhs = u.T ** power * lp_norm(V, table.q) * strichartz_norm(u, V.grid.n, q)
    return lhs, rhs

