"""
Tests for Neumann inversion, stationary states and the decay studies
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from model.grid import Field, make_grid, plane_wave
from model.norms import lp_norm
from model.potentials import bump_potential, from_field, gaussian_potential, zero_potential
from model.resolvent import ResolventConfig, apply_resolvent
from model.stationary import (
    ConvergenceError,
    Mode,
    NormChoice,
    build_stationary_state,
    decay_study,
    helmholtz_residual,
    neumann_invert,
    stationary_drift,
    working_norm,
)


@pytest.fixture
def grid2():
    return make_grid(2, 64, 8 * math.pi)


def constant_potential(grid, c):
    return from_field(Field(grid, np.full(grid.shape, c)), "3/2", allow_wrap=True)


def test_neumann_geometric_series():
    """A constant potential on a plane wave sums a geometric series of ratio 1/2."""
    grid = make_grid(2, 16, 2 * math.pi)
    V = constant_potential(grid, 2.5)
    cfg = ResolventConfig(grid, 2.0)
    rhs = plane_wave(grid, (1.0, 0.0))
    w, report = neumann_invert(V, cfg, rhs, NormChoice.lp(2), tol=1e-10)

    r = 2.5 / (3.0 + 4.0j)
    assert abs(r) == pytest.approx(0.5)
    assert 33 <= report.iterations <= 35
    assert report.converged
    assert report.contraction_estimate == pytest.approx(0.5, rel=1e-9)
    assert report.inverse_bound == pytest.approx(2.0, rel=1e-8)
    assert report.norm_used == "L2"
    assert np.max(np.abs(w.values - rhs.values / (1.0 - r))) < 1e-9


def test_neumann_zero_potential_and_zero_source(grid2):
    """V = 0 stops after one application; a zero source needs none."""
    V = zero_potential(grid2)
    cfg = ResolventConfig(grid2, 1.0)
    rhs = plane_wave(grid2, (1.0, 0.0))
    w, report = neumann_invert(V, cfg, rhs, NormChoice.lp(6))
    assert report.iterations == 1
    assert report.converged
    assert np.array_equal(w.values, rhs.values)

    w, report = neumann_invert(V, cfg, Field.zeros(grid2), NormChoice.lp(6))
    assert report.iterations == 0
    assert not np.any(w.values)


def test_neumann_rejects_bad_arguments(grid2):
    """Non-positive tolerances, empty budgets and foreign sources are refused."""
    V = zero_potential(grid2)
    cfg = ResolventConfig(grid2, 1.0)
    rhs = plane_wave(grid2, (1.0, 0.0))
    with pytest.raises(ValueError):
        neumann_invert(V, cfg, rhs, NormChoice.lp(2), tol=0.0)
    with pytest.raises(ValueError):
        neumann_invert(V, cfg, rhs, NormChoice.lp(2), max_iter=0)
    with pytest.raises(ValueError):
        neumann_invert(V, cfg, plane_wave(make_grid(2, 32, 8 * math.pi), (1.0, 0.0)), NormChoice.lp(2))


def test_stationary_state_solves_helmholtz(grid2):
    """A converged state satisfies the absorbed Helmholtz identity to the series tolerance."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s = build_stationary_state(V, 1.25, (0.6, 0.8), tol=1e-12)
    assert s.neumann.converged
    assert s.neumann.norm_used == "L6"
    assert s.residual < 1e-8
    assert helmholtz_residual(s, V) == pytest.approx(s.residual)
    assert np.allclose(s.wavevector, (0.75, 1.0))
    assert lp_norm(s.wcor, 2) > 0


def test_stationary_state_is_a_fixed_point(grid2):
    """w = w0 + P(V w) holds to 1e-9 of the source, and the report carries that residual."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s = build_stationary_state(V, 1.25, (0.6, 0.8))
    source = lp_norm(apply_resolvent(s.w0 * V.values, s.cfg), 6)
    defect = s.w - s.w0 - apply_resolvent(s.w * V.values, s.cfg)
    assert lp_norm(defect, 6) <= 1e-9 * source
    assert s.neumann.residual_norm <= 1e-9


def test_truncated_series_leaves_larger_residual(grid2):
    """Stopping after one term leaves a residual far above the converged one."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    cfg = ResolventConfig(grid2, 0.5)
    rhs = apply_resolvent(plane_wave(grid2, (0.5, 0.0)) * V.values, cfg)
    _, truncated = neumann_invert(V, cfg, rhs, NormChoice.lp(6), max_iter=1)
    _, full = neumann_invert(V, cfg, rhs, NormChoice.lp(6))
    assert not truncated.converged
    assert full.converged
    assert truncated.residual_norm > 1e3 * full.residual_norm


def test_plane_wave_has_unit_modulus(grid2):
    """Multiplying V by w0 leaves every Lebesgue norm unchanged."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s = build_stationary_state(V, 1.25, (0.6, 0.8))
    for p in (1, Fraction(3, 2), 2, "inf"):
        assert lp_norm(s.w0 * V.values, p) == pytest.approx(lp_norm(V.field, p), rel=1e-12)


def test_zero_potential_state_is_plane_wave(grid2):
    """With V = 0 the correction vanishes and the plane wave solves the identity."""
    V = zero_potential(grid2)
    s = build_stationary_state(V, 2.0, (1.0, 0.0))
    assert s.neumann.iterations == 0
    assert not np.any(s.wcor.values)
    assert s.residual < 1e-12


def test_stationary_state_rejects_bad_direction(grid2):
    """Directions must be unit vectors of the right dimension, and lattice-aligned."""
    V = zero_potential(grid2)
    with pytest.raises(ValueError):
        build_stationary_state(V, 1.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        build_stationary_state(V, 1.0, (1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        build_stationary_state(V, 1.1, (1.0, 0.0))


def test_divergent_series_raises(grid2):
    """A strong potential at low energy makes the series diverge."""
    V = gaussian_potential(grid2, 50.0, 0.8, "3/2")
    with pytest.raises(ConvergenceError) as info:
        build_stationary_state(V, 0.5, (1.0, 0.0), max_iter=30)
    assert info.value.report is not None
    assert not info.value.report.converged


def test_working_norm():
    """L^p away from the endpoint; X_lambda* at the endpoint, which needs n >= 3 and q = n/2."""
    grid3 = make_grid(3, 32, 8 * math.pi)
    assert working_norm(zero_potential(grid3, "3/2"), Mode.NONENDPOINT).label == "L6"
    assert working_norm(zero_potential(grid3, "3/2"), Mode.ENDPOINT).label == "Xstar"
    with pytest.raises(ValueError):
        working_norm(zero_potential(grid3, 2), Mode.ENDPOINT)
    with pytest.raises(ValueError):
        working_norm(zero_potential(make_grid(2, 32, 8 * math.pi)), Mode.ENDPOINT)


def test_nonendpoint_decay():
    """The correction decays along lambda in {1/2, 1, 2, 4} for a planar Gaussian."""
    grid = make_grid(2, 128, 16 * math.pi)
    V = gaussian_potential(grid, 0.1, 1.0, Fraction(3, 2))
    study = decay_study(V, Mode.NONENDPOINT, [0.5, 1.0, 2.0, 4.0], (1.0, 0.0), threads=2)
    assert len(study.rows) == 4
    assert study.slope_defined
    assert study.slope <= -0.45
    assert all(row.residual < 1e-6 for row in study.rows)
    assert study.rows[-1].contraction < study.rows[0].contraction


def test_endpoint_decay():
    """At the endpoint the X_lambda* norm of the correction decays for a 3D bump."""
    grid = make_grid(3, 32, 8 * math.pi)
    V = bump_potential(grid, 0.005, 0.25 * grid.L, Fraction(3, 2))
    study = decay_study(V, Mode.ENDPOINT, [0.25, 0.5, 1.0, 2.0], (1.0, 0.0, 0.0))
    assert study.norm_used == "Xstar"
    assert study.slope <= -0.15
    assert all(row.v_lambda is not None and row.v_lambda > 0 for row in study.rows)
    assert study.smallness_slope is not None
    assert study.smallness_slope <= 0.1


def test_decay_study_of_zero_potential(grid2):
    """The zero potential has no decay slope."""
    study = decay_study(zero_potential(grid2), Mode.NONENDPOINT, [1.0, 2.0], (1.0, 0.0))
    assert not study.slope_defined
    with pytest.raises(ValueError):
        decay_study(zero_potential(grid2), Mode.NONENDPOINT, [1.0], (1.0, 0.0))


def test_stationary_drift_is_absorption_bounded(grid2):
    """Evolving w drifts from exp(-i lambda^2 T) w by at most the absorption bound plus scheme error."""
    V = gaussian_potential(grid2, 0.1, 0.8, "3/2")
    s = build_stationary_state(V, 1.0, (1.0, 0.0))
    report = stationary_drift(s, V, 1.0)
    assert report.steps >= 1
    assert report.absorption_bound > 0
    assert report.distance <= 1.05 * report.absorption_bound + 1e-3 * lp_norm(s.w, 2)
