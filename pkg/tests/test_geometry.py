import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.errors import OutOfDomainError, ResolutionError
from signorini_lab.geometry import (Grid, ScalarField, ball_quadrature_grad_sq, interpolate, load_field,
                                    save_field, sphere_quadrature, sphere_samples)


def test_grid_basics():
    g = Grid(1, 65)
    assert g.h == pytest.approx(1 / 32)
    assert g.M == 33
    assert g.shape == (65, 33)
    assert Grid(2, 33).shape == (33, 33, 17)


@pytest.mark.parametrize("n,N", [(0, 65), (3, 65), (1, 64), (1, 31)])
def test_grid_rejects_bad_sizes(n, N):
    with pytest.raises(ValueError):
        Grid(n, N)


@settings(max_examples=40, deadline=None)
@given(i=st.integers(0, 64), k=st.integers(0, 32))
def test_node_index_roundtrip(i, k):
    g = Grid(1, 65)
    x = g.node_coord((i, k))
    assert g.node_index(x) == (i, k)


def test_interpolation_reproduces_linear_and_reflects():
    g = Grid(2, 33)
    f = ScalarField.from_function(g, lambda x: 1.0 + 2 * x[..., 0] - x[..., 1] + 3 * np.abs(x[..., 2]))
    pts = np.array([[0.1234, -0.377, 0.21], [0.5, 0.5, -0.21]])
    want = 1 + 2 * pts[:, 0] - pts[:, 1] + 3 * np.abs(pts[:, 2])
    assert np.allclose(interpolate(f, pts), want, atol=1e-12)


def test_spline_interpolation_exact_for_even_quadratics():
    g = Grid(1, 65)
    f = ScalarField.from_function(g, lambda x: x[..., 0] ** 2 - x[..., 1] ** 2)
    pts = np.array([[0.1, 0.13], [-0.31, -0.2], [0.0, 0.0]])
    assert np.allclose(interpolate(f, pts, order=3), pts[:, 0] ** 2 - pts[:, 1] ** 2, atol=1e-10)


def test_out_of_domain():
    g = Grid(1, 65)
    f = ScalarField.from_function(g, lambda x: x[..., 0])
    with pytest.raises(OutOfDomainError):
        interpolate(f, np.array([1.5, 0.0]))
    with pytest.raises(OutOfDomainError):
        sphere_quadrature(f, [0.9, 0.0], 0.2)
    with pytest.raises(ResolutionError):
        sphere_quadrature(f, [0.0, 0.0], g.h)


# sphere/ball oracles on the N=129 grid
@pytest.mark.parametrize("r", [0.1, 0.25, 0.5])
def test_sphere_oracle_2d(grid2d, r):
    one = ScalarField.from_function(grid2d, lambda x: np.ones(x.shape[:-1]))
    assert sphere_quadrature(one, [0, 0], r) == pytest.approx(2 * math.pi * r, rel=1e-10)
    f = ScalarField.from_function(grid2d, lambda x: x[..., 0])
    v, w, _ = sphere_samples(f, [0, 0], r)
    assert float(np.dot(w, v * v)) == pytest.approx(math.pi * r ** 3, rel=1e-6)
    assert ball_quadrature_grad_sq(f, [0, 0], r) == pytest.approx(math.pi * r ** 2, rel=1e-6)


def test_sphere_oracle_3d():
    g = Grid(2, 65)
    one = ScalarField.from_function(g, lambda x: np.ones(x.shape[:-1]))
    assert sphere_quadrature(one, [0, 0, 0], 0.3) == pytest.approx(4 * math.pi * 0.09, rel=1e-10)
    f = ScalarField.from_function(g, lambda x: x[..., 1])
    assert ball_quadrature_grad_sq(f, [0.1, 0, 0], 0.3) == pytest.approx(4 / 3 * math.pi * 0.027, rel=1e-5)


def test_field_roundtrip(tmp_path):
    g = Grid(1, 33)
    f = ScalarField.from_function(g, lambda x: np.sin(x[..., 0]) + x[..., 1] ** 2)
    save_field(tmp_path / "f.sigf", f)
    h = load_field(tmp_path / "f.sigf")
    assert h.grid == g and np.array_equal(h.values, f.values)


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "x.sigf"
    p.write_bytes(b"hello")
    with pytest.raises(ValueError):
        load_field(p)
