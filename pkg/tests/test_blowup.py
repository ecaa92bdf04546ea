import numpy as np
import pytest

from signorini_lab.blowup import (cubic_fit, first_blowup_quadratic, label_for, orthogonality_check,
                                  project_harmonic, second_blowup, sphere_inner)
from signorini_lab.catalog import CubicProfile, HalfPlaneSolution, QuadraticProfile
from signorini_lab.errors import NotQuadraticPointError, PreconditionError
from signorini_lab.geometry import Grid, ScalarField
from signorini_lab.polynomials import HarmonicPolynomial

G1 = Grid(1, 129)
G2 = Grid(2, 33)


def sampled(p, grid=G1):
    return ScalarField.from_function(grid, p)


def test_first_blowup_recovers_quadratic(quadratic_solve):
    fb = first_blowup_quadratic(quadratic_solve, np.zeros(2))
    assert not fb.degenerate
    assert np.allclose(fb.profile.A, np.eye(1), atol=1e-3)


def test_first_blowup_recovers_quadratic_3d():
    A = np.array([[1.0, 0.3], [0.3, 0.5]])
    fb = first_blowup_quadratic(sampled(QuadraticProfile(A), G2), np.zeros(3))
    assert np.allclose(fb.profile.A, A, atol=1e-3)


def test_gate_rejects_regular_point():
    with pytest.raises(PreconditionError):
        first_blowup_quadratic(sampled(HalfPlaneSolution(1.5)), np.zeros(2))


def test_indefinite_fit_is_rejected():
    u = sampled(QuadraticProfile(np.array([[-1.0]])))
    with pytest.raises(NotQuadraticPointError):
        first_blowup_quadratic(u, np.zeros(2), kappa_hat=2.0)


def test_second_blowup_of_ordinary_point():
    p = QuadraticProfile(np.eye(1))
    u = ScalarField(G1, sampled(p).values + 0.1 * sampled(CubicProfile.from_matrix(np.eye(1))).values)
    sb = second_blowup(u, np.zeros(2), p)
    assert sb.label == "ordinary"
    assert sb.lambda_hat == pytest.approx(3.0, abs=0.1)


def test_second_blowup_of_anomalous_point():
    p2 = QuadraticProfile(np.diag([1.0, 0.0]))
    q = QuadraticProfile(np.diag([1.0, -2.0]))
    u = ScalarField.from_function(G2, lambda x: p2(x) + 0.1 * q(x))
    sb = second_blowup(u, np.zeros(3), p2)
    assert sb.label == "anomalous"
    assert sb.lambda_hat == pytest.approx(2.0, abs=0.1)
    rep = orthogonality_check(p2, sb.q)
    assert rep.equality_ok(0.05)
    assert rep.inequalities_ok(0.05)


def test_label_bands():
    assert label_for(None) == "unresolved"
    assert label_for(float("nan")) == "unresolved"
    assert label_for(3.0) == "ordinary"
    assert label_for(2.0) == "anomalous"


def test_parity_polynomial_is_orthogonal():
    p2 = QuadraticProfile(np.diag([1.0, 0.0]))
    q = HarmonicPolynomial.from_terms({(1, 1, 0): 1.0})
    assert abs(orthogonality_check(p2, q).equality_residual) <= 1e-10


def test_sphere_inner_oracle():
    # int_{S^1} x^2 = pi
    assert sphere_inner(lambda x: x[..., 0], lambda x: x[..., 0], 1) == pytest.approx(np.pi, rel=1e-10)
    # int_{S^2} x^2 = 4 pi / 3
    assert sphere_inner(lambda x: x[..., 0], lambda x: x[..., 0], 2) == pytest.approx(4 * np.pi / 3, rel=1e-10)


def test_project_harmonic_recovers_polynomial():
    q = QuadraticProfile(np.diag([1.0, -2.0]))
    proj = project_harmonic(sampled(q, G2), np.zeros(3), 0.5, 2)
    pts = np.random.default_rng(1).normal(size=(20, 3))
    assert np.allclose(proj(pts), q(pts), atol=1e-6)


def test_cubic_fit_recovers_cubic():
    p = CubicProfile.from_matrix(np.eye(1) * 2.0)
    cf = cubic_fit(sampled(p), np.zeros(2))
    assert cf.profile.A[0, 0] == pytest.approx(2.0, rel=1e-6)
    assert cf.profile.a == pytest.approx(cf.profile.A[0, 0] / 3)
    assert not cf.flagged or cf.fit_residual < 1e-8
