"""
Tests for exponent arithmetic and the norm functionals
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from model.grid import Field, make_grid
from model.norms import (
    Trajectory,
    as_exponent,
    conjugate_exponent,
    exponents,
    format_exponent,
    holder_check,
    intersection_norm,
    lp_norm,
    mixed_norm,
    strichartz_holder_check,
    strichartz_norm,
    v_lambda_norm,
    x_norm_upper,
    xstar_norm,
)
from model.potentials import gaussian_potential, zero_potential
from utils.sampling import make_rng, random_smooth_field


@pytest.fixture
def grid3():
    return make_grid(3, 32, 8 * math.pi)


def test_exponents_three_dimensions():
    """n = 3, q = 3/2 gives q_n = 4, p_n = 6, p = 6, r = 2."""
    t = exponents(3, "3/2")
    assert (t.q_n, t.p_n, t.q, t.p, t.r) == (4, 6, Fraction(3, 2), 6, 2)
    assert t.endpoint


def test_exponents_two_dimensions():
    """In the plane p_n is infinite and q = 3/2 gives r = 3."""
    t = exponents(2, Fraction(3, 2))
    assert t.q_n == 6
    assert t.p_n == math.inf
    assert (t.p, t.r) == (6, 3)
    assert not t.endpoint
    assert t.decay_rate == Fraction(2, 3)


def test_exponents_clamp_large_q():
    """q above (n+1)/2 is clamped."""
    t = exponents(3, 5)
    assert t.q == 2
    assert t.p == 4
    assert t.r == Fraction(8, 3)
    assert t.decay_rate == Fraction(1, 2)


def test_exponents_reject_inadmissible_q():
    """q below n/2 in 3D, q <= 1 in 2D and unsupported dimensions are refused."""
    with pytest.raises(ValueError):
        exponents(3, Fraction(5, 4))
    with pytest.raises(ValueError):
        exponents(2, 1)
    with pytest.raises(ValueError):
        exponents(4, 2)


def test_exponent_helpers():
    """Parsing, conjugation and formatting of exponents."""
    assert as_exponent("inf") == math.inf
    assert as_exponent("7/3") == Fraction(7, 3)
    assert conjugate_exponent(4) == Fraction(4, 3)
    assert conjugate_exponent(1) == math.inf
    assert conjugate_exponent(math.inf) == 1
    assert format_exponent(math.inf) == "inf"
    assert format_exponent(Fraction(8, 3)) == "8/3"
    with pytest.raises(ValueError):
        conjugate_exponent(Fraction(1, 2))


def test_lp_norm_of_constant():
    """||c||_p on the box is |c| L^(n/p)."""
    grid = make_grid(2, 16, 3.0)
    f = Field(grid, np.full(grid.shape, 2.0 - 1.0j))
    c = abs(2.0 - 1.0j)
    assert lp_norm(f, 1) == pytest.approx(c * 9.0, rel=1e-13)
    assert lp_norm(f, 2) == pytest.approx(c * 3.0, rel=1e-13)
    assert lp_norm(f, "inf") == pytest.approx(c, rel=1e-13)
    assert lp_norm(Field.zeros(grid), 3) == 0.0


def test_holder_check_holds(grid3):
    """|int V u v| never exceeds ||V||_q ||u||_p ||v||_p."""
    rng = make_rng(7)
    V = gaussian_potential(grid3, 0.5, 0.8, "3/2")
    for _ in range(5):
        u = random_smooth_field(grid3, rng)
        v = random_smooth_field(grid3, rng)
        lhs, rhs = holder_check(V, u, v, V.q)
        assert lhs <= rhs * (1 + 1e-12)


def test_xstar_and_x_norm_duality(grid3):
    """The level-set bound on X_lambda pairs with X_lambda* as a dual norm."""
    rng = make_rng(11)
    lam = 2.0
    for _ in range(5):
        f = random_smooth_field(grid3, rng)
        w = random_smooth_field(grid3, rng)
        pairing = abs(grid3.cell_volume * np.sum(f.values * w.values))
        assert pairing <= x_norm_upper(f, lam, 3) * xstar_norm(w, lam, 3) * (1 + 1e-12)


def test_x_norm_upper_is_below_trivial_splittings(grid3):
    """The bound improves on putting all of f in either part, and tightens with more levels."""
    f = random_smooth_field(grid3, make_rng(3))
    lam = 4.0
    trivial = min(lam ** -0.25 * lp_norm(f, Fraction(4, 3)), lp_norm(f, Fraction(6, 5)))
    coarse = x_norm_upper(f, lam, 3, levels=2)
    fine = x_norm_upper(f, lam, 3, levels=8)
    assert coarse <= trivial * (1 + 1e-12)
    assert fine <= coarse * (1 + 1e-12)
    assert x_norm_upper(Field.zeros(grid3), lam, 3) == 0.0


def test_v_lambda_norm(grid3):
    """V_lambda is zero for V = 0, positive otherwise, and needs n >= 3."""
    assert v_lambda_norm(zero_potential(grid3), 1.0) == 0.0
    V = gaussian_potential(grid3, 0.3, 0.8, "3/2")
    assert v_lambda_norm(V, 1.0) > 0.0
    with pytest.raises(ValueError):
        v_lambda_norm(zero_potential(make_grid(2, 16, 4 * math.pi)), 1.0)
    with pytest.raises(ValueError):
        xstar_norm(V.field, 0.0, 3)


def test_v_lambda_norm_past_the_peak(grid3):
    """Once lambda ||V||_{3/2} exceeds max|V| the level set is empty and the norm is lambda^(-1/2) ||V||_2."""
    V = gaussian_potential(grid3, 0.3, 0.8, "3/2")
    values = [v_lambda_norm(V, lam) for lam in (0.5, 1.0, 2.0, 4.0)]
    for lam, value in zip((0.5, 1.0, 2.0, 4.0), values):
        assert value == pytest.approx(lam ** -0.5 * lp_norm(V, 2), rel=1e-12)
    assert all(b < a for a, b in zip(values, values[1:]))


def test_intersection_norm(grid3):
    """The intersection norm is the larger of the two Lebesgue norms."""
    V = gaussian_potential(grid3, 0.3, 0.8, "3/2")
    assert intersection_norm(V.field, 2, math.inf) == max(lp_norm(V, 2), 0.3)


def test_trajectory_validation():
    """Trajectories start at t = 0 with strictly increasing times and matching frames."""
    grid = make_grid(2, 16, 1.0)
    f = Field.zeros(grid)
    with pytest.raises(ValueError):
        Trajectory(grid, [0.1, 0.2], (f, f))
    with pytest.raises(ValueError):
        Trajectory(grid, [0.0, 0.0], (f, f))
    with pytest.raises(ValueError):
        Trajectory(grid, [0.0], (f, f))
    with pytest.raises(ValueError):
        Trajectory(grid, [0.0], (Field.zeros(make_grid(2, 32, 1.0)),))


def test_mixed_norm_of_steady_trajectory():
    """A time-constant trajectory has L^r L^p norm T^(1/r) ||f||_p and sup norm ||f||_p."""
    grid = make_grid(2, 16, 2.0)
    f = Field(grid, np.full(grid.shape, 3.0))
    times = np.linspace(0.0, 2.0, 9)
    u = Trajectory(grid, times, (f,) * len(times))
    assert mixed_norm(u, 3, 2) == pytest.approx(2.0 ** (1 / 3) * lp_norm(f, 2), rel=1e-12)
    assert mixed_norm(u, "inf", 2) == pytest.approx(lp_norm(f, 2), rel=1e-12)


def test_strichartz_norm_uses_admissible_pair(grid3):
    """For n = 3, q = 3/2 the Strichartz norm is the L^2_t L^6_x norm."""
    f = random_smooth_field(grid3, make_rng(9))
    times = np.linspace(0.0, 1.0, 5)
    u = Trajectory(grid3, times, (f,) * len(times))
    table = exponents(3, "3/2")
    assert (table.r, table.p) == (2, 6)
    assert strichartz_norm(u, 3, "3/2") == pytest.approx(mixed_norm(u, 2, 6), rel=1e-12)
    assert strichartz_norm(u, 3, "3/2") == pytest.approx(lp_norm(f, 6), rel=1e-12)


def test_strichartz_holder_check(grid3):
    """||V u||_{L^r' L^p'} stays below T^(1/r' - 1/r) ||V||_q ||u||_{L^r L^p}."""
    rng = make_rng(5)
    V = gaussian_potential(grid3, 0.5, 0.8, "3/2")
    times = np.linspace(0.0, 1.5, 7)
    frames = tuple(random_smooth_field(grid3, rng) for _ in times)
    lhs, rhs = strichartz_holder_check(V, Trajectory(grid3, times, frames), V.q)
    assert 0.0 < lhs <= rhs * (1 + 1e-12)
