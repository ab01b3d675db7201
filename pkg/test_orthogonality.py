"""
Tests for the time-dependent pairing identity and the stationary relations
"""
import math

import numpy as np
import pytest

from inversion.orthogonality import (
    alessandrini_pair,
    bias_budget,
    cancellation_decomposition,
    remainder_bounds,
    stationary_orthogonality,
)
from inversion.reconstruct import direct_transform, scattering_vectors, xi_set
from model.grid import Field, make_grid, plane_wave
from model.potentials import gaussian_potential, zero_potential
from model.stationary import Mode, build_stationary_state
from utils.sampling import make_rng


@pytest.fixture
def grid2():
    return make_grid(2, 64, 8 * math.pi)


def packet(grid, width=1.0, wavevector=None):
    f = Field(grid, np.exp(-np.broadcast_to(grid.radius2, grid.shape) / (2.0 * width ** 2)))
    return f if wavevector is None else f * plane_wave(grid, wavevector).values


def states(V1, V2, cfg, mode=Mode.NONENDPOINT):
    s1 = build_stationary_state(V1, cfg.lam, cfg.omega1, mode)
    s2 = build_stationary_state(V2.conj(), cfg.lam, cfg.omega2, mode)
    return s1, s2


def test_alessandrini_pair_closes_with_refinement(grid2):
    """Both sides agree to 1e-3 and the gap shrinks at least threefold with 4x the steps."""
    V1 = gaussian_potential(grid2, 0.2, 0.8, "3/2")
    V2 = zero_potential(grid2, "3/2")
    f = packet(grid2)
    g = packet(grid2, wavevector=(0.5, 0.0))
    coarse = alessandrini_pair(V1, V2, f, g, 1.0, 256)
    fine = alessandrini_pair(V1, V2, f, g, 1.0, 1024)
    assert abs(coarse.lhs) > 0
    assert coarse.gap <= 1e-3
    assert fine.gap <= coarse.gap / 3


def test_alessandrini_pair_of_equal_potentials(grid2):
    """Identical potentials give zero on both sides."""
    V = gaussian_potential(grid2, 0.2, 0.8, "3/2")
    pair = alessandrini_pair(V, V, packet(grid2), packet(grid2), 1.0, 64)
    assert pair.lhs == 0
    assert pair.rhs == 0
    assert pair.gap == 0.0


def test_alessandrini_pair_rejects_bad_keep(grid2):
    """The stored stride must divide the step count."""
    V = zero_potential(grid2)
    with pytest.raises(ValueError):
        alessandrini_pair(V, V, packet(grid2), packet(grid2), 1.0, 256, keep=3)


def test_decomposition_adds_up(grid2):
    """Leading term plus remainders is the stationary pairing; the leading term is the transform."""
    V1 = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    V2 = gaussian_potential(grid2, 0.05, 0.6, "3/2", center=(0.5, 0.0))
    cfg = scattering_vectors((1.0, 0.0), 4, grid2)
    s1, s2 = states(V1, V2, cfg)
    parts = cancellation_decomposition(V1, V2, s1, s2)
    total = stationary_orthogonality(V1, V2, s1, s2, 1.0)
    assert abs(parts.total - total) <= 1e-12 * abs(total)
    assert stationary_orthogonality(V1, V2, s1, s2, 2.5) == pytest.approx(2.5 * total)
    F = Field(grid2, V1.values - V2.values)
    expected = (2.0 * math.pi) * direct_transform(F, cfg.xi)
    assert abs(parts.leading - expected) <= 1e-12 * abs(expected)


def test_remainders_respect_holder_bounds(grid2):
    """Each remainder is below its Hoelder bound."""
    V1 = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    V2 = gaussian_potential(grid2, 0.05, 0.6, "3/2", center=(0.5, 0.0))
    cfg = scattering_vectors((0.5, 0.5), 4, grid2)
    s1, s2 = states(V1, V2, cfg)
    parts = cancellation_decomposition(V1, V2, s1, s2)
    for rem, bound in zip(parts.remainders, remainder_bounds(V1, V2, s1, s2)):
        assert abs(rem) <= bound * (1 + 1e-12)


def test_endpoint_remainder_bounds():
    """The X_lambda / X_lambda* bounds hold for a 3D pair at the endpoint."""
    grid = make_grid(3, 32, 8 * math.pi)
    V1 = gaussian_potential(grid, 0.05, 0.8, "3/2")
    V2 = zero_potential(grid, "3/2")
    cfg = scattering_vectors((1.0, 0.0, 0.0), 4, grid)
    s1, s2 = states(V1, V2, cfg, Mode.ENDPOINT)
    parts = cancellation_decomposition(V1, V2, s1, s2)
    bounds = remainder_bounds(V1, V2, s1, s2, Mode.ENDPOINT)
    for rem, bound in zip(parts.remainders, bounds):
        assert abs(rem) <= bound * (1 + 1e-12)


def test_states_must_share_energy(grid2):
    """Pairings of states at different energies are refused."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s1 = build_stationary_state(V, 1.0, (1.0, 0.0))
    s2 = build_stationary_state(V, 2.0, (1.0, 0.0))
    with pytest.raises(ValueError):
        stationary_orthogonality(V, V, s1, s2, 1.0)


def test_bias_budget(grid2):
    """The budget is T (tol + eps lambda) ||V1||_1."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s = build_stationary_state(V, 1.0, (1.0, 0.0))
    expected = 2.0 * (1e-10 + s.cfg.eps * s.lam) * V.norms["1"]
    assert bias_budget(V, s, 2.0, tol=1e-10) == pytest.approx(expected)
    assert V.norms["1"] == pytest.approx(0.1 * 2 * math.pi * 0.64, rel=1e-10)


def test_equal_potentials_stay_within_bias_budget(grid2):
    """With V1 = V2 the pairing stays below the bias budget over random energies and directions."""
    rng = make_rng(77)
    V1 = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    V2 = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    xis = xi_set(grid2, 2.0)
    for _ in range(5):
        xi = xis[rng.integers(len(xis))]
        cfg = scattering_vectors(xi, int(rng.choice([2, 4, 8])), grid2)
        s1, s2 = states(V1, V2, cfg)
        T = rng.uniform(0.5, 2.0)
        assert abs(stationary_orthogonality(V1, V2, s1, s2, T)) <= bias_budget(V1, s1, T)


def test_pairing_is_linear_in_the_difference(grid2):
    """Doubling V1 - V2 with the states held fixed doubles the pairing."""
    V1 = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    V2 = zero_potential(grid2, "3/2")
    s1, s2 = states(V1, V2, scattering_vectors((1.0, 0.5), 4, grid2))
    once = stationary_orthogonality(V1, V2, s1, s2, 1.0)
    twice = stationary_orthogonality(V1, gaussian_potential(grid2, -0.1, 0.8, "3/2"), s1, s2, 1.0)
    assert abs(once) > 0
    assert abs(twice - 2 * once) <= 1e-12 * abs(once)
