import math

import numpy as np
import pytest

from signorini_lab.catalog import QuadraticProfile
from signorini_lab.data import Constant, Lift
from signorini_lab.errors import InsufficientRangeError, PreconditionError
from signorini_lab.families import (THREADS_ENV, build_family, check_perturbation, cleaning_exponent,
                                    cleaning_radius, geometric_t_grid, tau_map, thin_growth, thread_count,
                                    verify_hopf)
from signorini_lab.geometry import Grid

GRID = Grid(1, 129)


@pytest.fixture(scope="module")
def quad_family():
    ts = geometric_t_grid(1e-4, 1e-1, 13, negative=True)
    return build_family(QuadraticProfile(np.eye(1)), Lift(0.5), ts, GRID, workers=2)


def test_t_grid_shape():
    ts = geometric_t_grid(1e-4, 1e-1, 4, negative=True)
    assert ts == tuple(sorted(ts))
    assert 0.0 in ts and len(ts) == 9
    assert ts[-1] == pytest.approx(0.1) and ts[0] == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        geometric_t_grid(0.0, 1.0, 3)


def test_thread_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ValueError):
        thread_count()


def test_negative_perturbation_rejected():
    with pytest.raises(PreconditionError):
        check_perturbation(Constant(-1.0), GRID)
    with pytest.raises(PreconditionError):
        build_family(Constant(1.0), Constant(-1.0), (0.0, 0.1), GRID)


def test_perturbation_must_lift_off_thin_space():
    with pytest.raises(PreconditionError):
        check_perturbation(Constant(0.5), GRID)
    check_perturbation(Lift(0.5), GRID)


def test_trivial_family_without_contact():
    fam = build_family(Constant(1.0), Constant(1.0), (0.0, 0.01, 0.1), GRID)
    assert fam.monotonicity.ok
    assert np.allclose(fam.difference(0.1), 0.1, atol=1e-7)
    assert verify_hopf(fam, 0.0) is None


def test_family_is_monotone(quad_family):
    fam = quad_family
    assert fam.monotonicity.ok
    for a, b in zip(fam.t_grid, fam.t_grid[1:]):
        assert np.min(fam[b].u.values - fam[a].u.values) >= -1e-6


def test_family_indexing(quad_family):
    with pytest.raises(KeyError):
        quad_family[0.5]


def test_hopf_positive_and_stable(quad_family):
    cs = [verify_hopf(quad_family, t) for t in quad_family.t_grid if t > 0]
    assert min(cs) > 0
    assert max(cs) / min(cs) <= 2.0
    with pytest.raises(PreconditionError):
        verify_hopf(quad_family, -0.1)
    with pytest.raises(PreconditionError):
        verify_hopf(quad_family, 0.1, r=0.75)


def test_thin_growth(quad_family):
    fit = thin_growth(quad_family, 0.1)
    assert math.isfinite(fit.slope) and np.all(fit.y > 0)
    with pytest.raises(InsufficientRangeError):
        thin_growth(quad_family, 0.1, r_range=[0.1, 0.2, 0.3])


def test_fill_side_clears_contact(quad_family):
    fill = cleaning_exponent(quad_family, side="fill")
    assert fill.informative and fill.monotone
    assert np.all(np.diff(fill.R) <= quad_family.grid.h + 1e-12)


def test_vacate_side_is_noninformative(quad_family):
    # a positive lift removes the single contact point at once
    vac = cleaning_exponent(quad_family, side="vacate")
    assert not vac.informative and math.isnan(vac.slope)
    assert cleaning_radius(quad_family[0.1], [0.0], "vacate") == pytest.approx(0.4)
    with pytest.raises(ValueError):
        cleaning_exponent(quad_family, side="up")


def test_tau_map(quad_family):
    taus = tau_map(quad_family)
    assert taus
    for iv in taus.values():
        assert iv.t_min <= iv.t_max <= 0.0
        assert iv.width >= 0
