import numpy as np
import pytest

from signorini_lab.catalog import HalfPlaneSolution, QuadraticProfile
from signorini_lab.data import Constant, RandomDatum
from signorini_lab.errors import NotConvergedError, PreconditionError
from signorini_lab.geometry import Grid, ScalarField
from signorini_lab.solver import (SignoriniProblem, compare_ordered, compute_residuals, discrete_laplacian,
                                  solve, verify_superharmonicity)


def exact(profile, grid):
    return ScalarField.from_function(grid, profile).values


def test_quadratic_profile_is_reproduced(quadratic_solve):
    r = quadratic_solve
    err = np.max(np.abs(r.u.values - exact(QuadraticProfile(np.eye(1)), r.grid)))
    assert err <= 10 * r.tol
    assert r.residuals_ok()


def test_regular_profile_first_order():
    errs = []
    for N in (65, 129):
        g = Grid(1, N)
        r = solve(SignoriniProblem(g, HalfPlaneSolution(1.5)))
        errs.append(np.max(np.abs(r.u.values - exact(HalfPlaneSolution(1.5), g))))
    assert errs[0] / errs[1] >= 1.7


def test_regular_contact_set(regular_solve):
    r = regular_solve
    x = r.grid.thin_coords()
    contact = np.asarray(r.contact_mask)
    assert contact[x < -r.grid.h].all()
    assert not contact[x > r.grid.h].any()


def test_constant_datum_has_no_contact():
    g = Grid(2, 33)
    r = solve(SignoriniProblem(g, Constant(1.0)))
    assert np.allclose(r.u.values, 1.0, atol=1e-8)
    assert not np.asarray(r.contact_mask).any()


def test_residual_invariants_on_random_data():
    g = Grid(1, 65)
    r = solve(SignoriniProblem(g, RandomDatum(1, 3)))
    assert r.residuals_ok()
    assert np.min(r.u.thin_values) >= 0.0
    assert verify_superharmonicity(r) <= r.tol / g.h ** 2


def test_energy_decreases():
    g = Grid(1, 33)
    r = solve(SignoriniProblem(g, RandomDatum(1, 1)), record_energy=True)
    e = np.array(r.energies)
    assert len(e) > 2
    assert np.all(np.diff(e) <= 1e-12 * max(1.0, abs(e[0])))


def test_deterministic():
    g = Grid(1, 65)
    a = solve(SignoriniProblem(g, RandomDatum(1, 5)))
    b = solve(SignoriniProblem(g, RandomDatum(1, 5)))
    assert np.array_equal(a.u.values, b.u.values)
    assert a.iterations == b.iterations


def test_not_converged_carries_result():
    g = Grid(1, 65)
    with pytest.raises(NotConvergedError) as info:
        solve(SignoriniProblem(g, HalfPlaneSolution(1.5), max_iters=3))
    assert info.value.result is not None
    assert info.value.result.iterations == 3


def test_bad_parameters():
    g = Grid(1, 33)
    with pytest.raises(ValueError):
        SignoriniProblem(g, Constant(), omega=2.0)
    with pytest.raises(ValueError):
        SignoriniProblem(g, Constant(), tol=0.0)


def test_discrete_laplacian_of_harmonic_quadratic_vanishes():
    g = Grid(2, 33)
    vals = exact(QuadraticProfile(np.diag([1.0, 2.0])), g)
    lap = discrete_laplacian(vals, g.h)
    assert np.max(np.abs(lap)) < 1e-9
    res = compute_residuals(vals, g.h)
    assert res.pde < 1e-9


def test_comparison_principle_monotone_data():
    # larger data give larger solutions
    g = Grid(1, 65)
    lo = solve(SignoriniProblem(g, RandomDatum(1, 2)))
    hi = solve(SignoriniProblem(g, lambda x: RandomDatum(1, 2)(x) + 0.1))
    assert np.min(hi.u.values - lo.u.values) >= -1e-8


def test_compare_ordered_identical(regular_solve):
    rep = compare_ordered(regular_solve, regular_solve, [0.0, 0.0])
    assert rep.coincide and rep.hypotheses_hold
    assert rep.v_frequency == pytest.approx(1.5, abs=0.1)


def test_compare_ordered_requires_order(regular_solve, quadratic_solve):
    with pytest.raises(PreconditionError):
        compare_ordered(quadratic_solve, regular_solve, [0.0, 0.0])
