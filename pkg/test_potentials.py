"""
Tests for potential construction, support checks and the factory helpers
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from model.grid import Field, Representation, make_grid
from model.potentials import (
    bump_potential,
    bump_profile,
    from_field,
    gaussian_potential,
    gaussian_transform,
    singular_potential,
    zero_potential,
)


@pytest.fixture
def grid2():
    return make_grid(2, 64, 8 * math.pi)


def test_zero_potential_defaults(grid2):
    """The zero potential carries q = (n+1)/2 and zero norms."""
    V = zero_potential(grid2)
    assert V.q == Fraction(3, 2)
    assert V.is_zero
    assert V.is_real
    assert all(value == 0.0 for value in V.norms.values())


def test_cached_norms(grid2):
    """Cached Lebesgue norms of a Gaussian match the closed forms."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    assert V.norms["1"] == pytest.approx(0.1 * 2 * math.pi * 0.64, rel=1e-10)
    assert V.norms["(n+1)/2"] == pytest.approx(0.1 * (4 * math.pi * 0.64 / 3) ** (2 / 3), rel=1e-10)
    assert V.norms["q"] == V.norms["(n+1)/2"]


def test_support_check(grid2):
    """Wide potentials are refused unless wrap-around is allowed."""
    r2 = np.broadcast_to(grid2.radius2, grid2.shape)
    wide = Field(grid2, np.exp(-r2 / 18.0))
    with pytest.raises(ValueError):
        from_field(wide, "3/2")
    assert from_field(wide, "3/2", allow_wrap=True).allow_wrap
    with pytest.raises(ValueError):
        from_field(Field(grid2, np.ones(grid2.shape), Representation.SPECTRAL), "3/2", allow_wrap=True)


def test_arithmetic(grid2):
    """conj, scaled and differences act on the samples."""
    V1 = gaussian_potential(grid2, 0.1j, 0.8, "3/2")
    V2 = gaussian_potential(grid2, 0.05, 0.6, "3/2")
    assert not V1.is_real
    assert np.array_equal(V1.conj().values, np.conj(V1.values))
    assert np.allclose(V1.scaled(2.0).values, 2.0 * V1.values)
    assert np.allclose((V1 - V2).values, V1.values - V2.values)


def test_bump_profile():
    """The bump peaks at 1 in the centre and vanishes outside its radius."""
    profile = bump_profile(np.array([0.0, 0.25, 1.0, 4.0]), 1.0)
    assert profile[0] == 1.0
    assert 0.0 < profile[1] < 1.0
    assert profile[2] == 0.0
    assert profile[3] == 0.0


def test_bump_radius_limited_to_half_box(grid2):
    """Bumps wider than the central half-box are refused."""
    bump_potential(grid2, 1.0, 0.25 * grid2.L, "3/2")
    with pytest.raises(ValueError):
        bump_potential(grid2, 1.0, 0.25 * grid2.L + 0.1, "3/2")


def test_singular_potential(grid2):
    """|x|^(-alpha) is sampled at h/2 in the origin and needs alpha < n/q."""
    V = singular_potential(grid2, 1.0, 0.5, grid2.L / 8, "3/2")
    assert np.abs(V.values).max() == pytest.approx((0.5 * grid2.h) ** -0.5)
    with pytest.raises(ValueError):
        singular_potential(grid2, 1.0, 1.5, grid2.L / 8, "3/2")


def test_gaussian_transform_shift(grid2):
    """Moving the centre multiplies the transform by exp(-i xi.c)."""
    base = gaussian_transform(grid2, 0.1, 0.8, (1.0, 0.0))
    shifted = gaussian_transform(grid2, 0.1, 0.8, (1.0, 0.0), center=(0.5, 0.0))
    assert base == pytest.approx(0.1 * 0.64 * math.exp(-0.32))
    assert shifted == pytest.approx(base * np.exp(-0.5j))
