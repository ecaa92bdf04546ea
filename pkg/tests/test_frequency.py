import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.catalog import CubicProfile, HalfPlaneSolution, QuadraticProfile
from signorini_lab.frequency import (frequency_profile, growth_check, growth_check_w, log_C_delta,
                                     profile_radii, w_frequency_profile)
from signorini_lab.geometry import Grid, ScalarField

GRID = Grid(1, 129)
ORIGIN = np.zeros(2)


def sampled(p, grid=GRID):
    return ScalarField.from_function(grid, p)


@pytest.mark.parametrize("profile,degree", [
    (QuadraticProfile(np.eye(1)), 2.0),
    (CubicProfile.from_matrix(np.eye(1)), 3.0),
    (HalfPlaneSolution(1.5), 1.5),
    (HalfPlaneSolution(3.5), 3.5),
])
def test_homogeneous_profiles_have_constant_frequency(profile, degree):
    prof = frequency_profile(sampled(profile), ORIGIN, 0.5)
    assert prof.reliable
    assert np.max(np.abs(prof.phi - degree)) <= 0.03
    assert prof.kappa_hat == pytest.approx(degree, abs=0.05)


@settings(max_examples=10, deadline=None)
@given(scale=st.floats(0.01, 100.0))
def test_frequency_is_scale_invariant(scale):
    base = frequency_profile(sampled(HalfPlaneSolution(1.5)), ORIGIN, 0.4)
    scaled = frequency_profile(ScalarField(GRID, scale * sampled(HalfPlaneSolution(1.5)).values), ORIGIN, 0.4)
    assert np.allclose(base.phi, scaled.phi, rtol=1e-9)


def test_profile_radii_grid():
    r = profile_radii(GRID.h, 0.5)
    assert r[0] == pytest.approx(4 * GRID.h) or r[0] >= 4 * GRID.h - 1e-12
    assert r[-1] <= 0.5 + 1e-12
    assert np.all(np.diff(r) > 0)
    with pytest.raises(ValueError):
        profile_radii(GRID.h, GRID.h)


def test_growth_bounds_hold_for_polynomial():
    prof = frequency_profile(sampled(HalfPlaneSolution(1.5)), ORIGIN, 0.5)
    radii = prof.radii
    for i in range(len(radii) - 1):
        assert growth_check(prof, radii[i], radii[-1]) == (True, True)
    with pytest.raises(ValueError):
        growth_check(prof, 0.3, 0.2)


def test_log_C_delta():
    assert log_C_delta(2.0, 2.0, 0.1) == 0.0
    assert log_C_delta(2.0, 2.5, 0.25) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        log_C_delta(2.0, 2.5, 0.0)


def test_log_C_delta_is_the_tight_constant():
    lo, hi, delta = 2.0, 2.6, 0.2
    C = log_C_delta(lo, hi, delta)
    L = np.linspace(0, 20, 2001)
    gap = np.sqrt(2 * (hi - lo) * L) - delta * L
    assert np.max(gap) <= C + 1e-12
    assert np.max(gap) == pytest.approx(C, rel=1e-3)


def test_vanishing_field_is_unreliable():
    prof = frequency_profile(ScalarField(GRID, np.zeros(GRID.shape)), ORIGIN, 0.3)
    assert not prof.reliable and prof.kappa_hat is None


def test_w_profile_of_exact_quadratic_is_degenerate():
    p = QuadraticProfile(np.eye(1))
    prof = w_frequency_profile(sampled(p), p, ORIGIN, 0.4)
    assert prof.kappa_hat is None


def test_w_profile_of_quadratic_plus_cubic(quadratic_solve):
    # u - p recovers the homogeneity of the remainder
    p = QuadraticProfile(np.eye(1))
    q = CubicProfile.from_matrix(np.eye(1))
    field = ScalarField(GRID, sampled(p).values + 0.1 * sampled(q).values)
    prof = w_frequency_profile(field, p, ORIGIN, 0.5)
    assert prof.kappa_hat == pytest.approx(3.0, abs=0.05)
    for r in prof.radii[:-1]:
        assert growth_check_w(prof, r, prof.radii[-1], 0.1) == (True, True)


def test_w_profile_requires_thin_center():
    p = QuadraticProfile(np.eye(1))
    with pytest.raises(Exception):
        w_frequency_profile(sampled(p), p, np.array([0.0, 0.1]), 0.3)


def test_phi_interpolation_range():
    prof = frequency_profile(sampled(HalfPlaneSolution(1.5)), ORIGIN, 0.4)
    assert math.isfinite(prof.phi_at(prof.radii[1]))
    with pytest.raises(ValueError):
        prof.phi_at(0.9)
