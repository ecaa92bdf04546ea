import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.catalog import (CubicProfile, HalfPlaneSolution, QuadraticProfile, canonical_catalog,
                                   harmonic_trace_ratio, is_admissible_homogeneity, nearest_in_S,
                                   profile_from_json, profile_to_json, validate_solution)


@pytest.mark.parametrize("n", [1, 2])
def test_canonical_catalog_validates(n):
    for p in canonical_catalog(n):
        rep = validate_solution(p, step=1e-4)
        assert rep.valid, (p, rep.checks)
        assert rep.max_violation <= 1e-6


def test_harmonic_trace_ratio_oracle():
    # the finite-difference oracle settles the cubic coefficient relation
    assert harmonic_trace_ratio(1) == 3.0
    assert harmonic_trace_ratio(2) == 3.0


@pytest.mark.parametrize("bad", [
    QuadraticProfile(np.array([[-1.0]])),                    # negative on the thin space
    CubicProfile(1.0, np.array([[1.0]])),                    # trace relation broken: not harmonic
    CubicProfile(-1 / 3, -np.eye(1)),                         # wrong sign of the thin derivative
])
def test_invalid_profiles_fail(bad):
    assert not validate_solution(bad).valid


def test_halfplane_rejects_inadmissible_kappa():
    with pytest.raises(ValueError):
        HalfPlaneSolution(2.5)


@pytest.mark.parametrize("kappa,nearest", [(1.5, 1.5), (1.52, 1.5), (1.9, 2.0), (3.4, 3.5), (3.2, 3.0),
                                           (4.6, 5.0), (4.4, 4.0), (5.4, 5.5), (7.0, 7.0)])
def test_nearest_in_S(kappa, nearest):
    assert nearest_in_S(kappa) == nearest


def test_admissibility():
    assert is_admissible_homogeneity(3.45, 0.1) == (True, 3.5)
    assert is_admissible_homogeneity(2.25, 0.1)[0] is False
    with pytest.raises(ValueError):
        is_admissible_homogeneity(0.0, 0.1)


@settings(max_examples=25, deadline=None)
@given(vals=st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3))
def test_quadratic_roundtrip_and_homogeneity(vals):
    A = np.array([[vals[0], vals[1]], [vals[1], vals[2]]])
    p = QuadraticProfile(A)
    q = profile_from_json(profile_to_json(p))
    x = np.array([[0.3, -0.2, 0.4], [0.1, 0.5, -0.7]])
    assert np.allclose(p(x), q(x))
    assert np.allclose(p(3 * x), 9 * p(x))
    # P2 membership is PSD-ness of A
    assert p.in_P2 == (np.linalg.eigvalsh(A)[0] >= -1e-10)


@settings(max_examples=20, deadline=None)
@given(d=st.lists(st.floats(0.0, 2.0), min_size=2, max_size=2), off=st.floats(-0.5, 0.5))
def test_cubic_from_matrix_is_valid_for_psd(d, off):
    A = np.array([[d[0] + 1, off], [off, d[1] + 1]])
    p = CubicProfile.from_matrix(A)
    assert abs(p.trace_defect) < 1e-12
    assert validate_solution(p).valid


@pytest.mark.parametrize("p", canonical_catalog(2))
def test_profiles_are_even(p):
    x = np.random.default_rng(0).uniform(-1, 1, (30, 3))
    xr = x.copy()
    xr[:, -1] *= -1
    assert np.allclose(p(x), p(xr))
