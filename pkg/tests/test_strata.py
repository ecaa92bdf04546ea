import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.data import Constant
from signorini_lab.errors import InsufficientRangeError
from signorini_lab.geometry import Grid
from signorini_lab.solver import SignoriniProblem, solve
from signorini_lab.strata import (REG, UNRESOLVED, box_counting_dimension, classify, extract_free_boundary,
                                  free_boundary_coordinates, is_near_S)


def test_regular_free_boundary_located(regular_solve):
    pts = extract_free_boundary(regular_solve)
    assert len(pts) == 1
    assert abs(pts[0].x[0]) <= regular_solve.grid.h + 1e-12


def test_regular_point_classified(regular_solve):
    (pt,) = classify(regular_solve, extract_free_boundary(regular_solve))
    assert pt.stratum == REG
    assert pt.kappa_hat == pytest.approx(1.5, abs=0.1)


def test_no_contact_no_free_boundary():
    r = solve(SignoriniProblem(Grid(1, 33), Constant(1.0)))
    assert extract_free_boundary(r) == []
    assert free_boundary_coordinates([]).size == 0


def test_quadratic_contact_only_at_origin(quadratic_solve):
    # full contact or isolated contact are not boundary sets in the interior sense
    pts = extract_free_boundary(quadratic_solve)
    assert all(abs(p.x[0]) <= 2 * quadratic_solve.grid.h for p in pts)


def test_low_clearance_is_unresolved(regular_solve):
    pts = extract_free_boundary(regular_solve, clearance_gate=2.0)
    assert all(p.low_confidence for p in pts)
    assert classify(regular_solve, pts)[0].stratum == UNRESOLVED


def test_classification_is_order_preserving_with_threads(regular_solve):
    pts = extract_free_boundary(regular_solve) * 3
    a = classify(regular_solve, pts, workers=1)
    b = classify(regular_solve, pts, workers=3)
    assert [p.kappa_hat for p in a] == [p.kappa_hat for p in b]


def test_box_counting_line():
    s = np.linspace(0, 1, 2000)
    line = np.stack([s, 0.5 * s], -1)
    bc = box_counting_dimension(line, [1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64])
    assert bc.dimension == pytest.approx(1.0, abs=0.15)
    assert not bc.flagged


def test_box_counting_point_and_flags():
    bc = box_counting_dimension([[0.1, 0.2]], [0.5, 0.25, 0.125, 0.0625])
    assert bc.dimension == 0.0
    assert bc.flagged and "fewer than 10" in bc.reason
    with pytest.raises(InsufficientRangeError):
        box_counting_dimension([[0.0, 0.0]], [0.1])


@settings(max_examples=15, deadline=None)
@given(k=st.integers(1, 4))
def test_box_counting_scale_invariant(k):
    rng = np.random.default_rng(k)
    s = rng.uniform(0, 1, 3000)
    curve = np.stack([s, s ** 2], -1)
    scales = [2.0 ** -j for j in range(2, 7)]
    a = box_counting_dimension(curve, scales)
    b = box_counting_dimension(curve * 2 ** k, [x * 2 ** k for x in scales])
    assert a.counts == b.counts


def test_is_near_S():
    assert is_near_S(1.52)
    assert not is_near_S(2.5)
    assert not is_near_S(None)
    assert not is_near_S(float("nan"))
