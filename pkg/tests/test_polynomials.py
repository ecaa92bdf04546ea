import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.polynomials import HarmonicPolynomial, even_harmonic_basis


@pytest.mark.parametrize("degree", range(1, 7))
def test_basis_dimension_2d(degree):
    # even harmonics in two variables: only Re (x + iy)^k survives
    _, B = even_harmonic_basis(1, degree)
    assert B.shape[0] == 1


@pytest.mark.parametrize("degree", range(1, 6))
def test_basis_dimension_3d(degree):
    _, B = even_harmonic_basis(2, degree)
    assert B.shape[0] == degree + 1


@pytest.mark.parametrize("n", [1, 2])
def test_basis_rows_orthonormal(n):
    _, B = even_harmonic_basis(n, 4)
    assert np.allclose(B @ B.T, np.eye(B.shape[0]), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.sampled_from([1, 2]), degree=st.integers(1, 6),
       seed=st.integers(0, 10_000))
def test_random_combinations_are_harmonic_and_even(n, degree, seed):
    rng = np.random.default_rng(seed)
    _, B = even_harmonic_basis(n, degree)
    p = HarmonicPolynomial.from_basis(n, degree, rng.normal(size=B.shape[0]))
    assert p.laplacian_norm() < 1e-9
    x = rng.uniform(-1, 1, size=(20, n + 1))
    xr = x.copy()
    xr[:, -1] *= -1
    assert np.allclose(p(x), p(xr))
    # homogeneity
    assert np.allclose(p(2.0 * x), 2.0 ** degree * p(x))


def test_from_terms_and_dict():
    p = HarmonicPolynomial.from_terms({(3, 0): 1.0, (1, 2): -3.0})
    assert p.degree == 3 and p.n == 1
    assert p.laplacian_norm() == 0.0
    assert p.to_dict()["type"] == "harmonic"


def test_inhomogeneous_rejected():
    with pytest.raises(ValueError):
        HarmonicPolynomial(np.array([[2, 0], [1, 0]]), np.array([1.0, 1.0]))
