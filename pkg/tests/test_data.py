import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signorini_lab.data import Bump, Combination, Constant, Lift, RandomDatum, datum_from_dict, datum_to_json, load_datum
from signorini_lab.geometry import Grid


def _thin_boundary(n):
    s = np.linspace(-1, 1, 401)
    if n == 1:
        return np.array([[-1.0, 0.0], [1.0, 0.0]])
    z = np.zeros_like(s)
    return np.concatenate([np.stack([np.full_like(s, a), s, z], -1) for a in (-1, 1)]
                          + [np.stack([s, np.full_like(s, a), z], -1) for a in (-1, 1)])


@settings(max_examples=20, deadline=None)
@given(n=st.sampled_from([1, 2]), seed=st.integers(0, 10_000))
def test_random_datum_nonnegative_on_thin_boundary(n, seed):
    g = RandomDatum(n, seed)
    assert np.min(g(_thin_boundary(n))) >= g.margin - 1e-9


def test_random_datum_reaches_into_contact():
    # the harmonic well pushes the thin interior below zero
    g = RandomDatum(1, 0)
    assert g(np.array([0.0, 0.0])) < 0


def test_random_datum_deterministic_and_roundtrip():
    a = RandomDatum(2, 7)
    b = datum_from_dict(json.loads(datum_to_json(a)))
    x = Grid(2, 33).points()
    assert np.array_equal(a(x), b(x))


def test_lift_profile():
    lift = Lift(0.5)
    assert lift(np.array([0.3, 0.0])) == 0.0
    assert lift(np.array([0.3, 0.6])) == 1.0
    assert lift(np.array([0.3, -0.25])) == pytest.approx(0.5)


def test_bump_and_combination():
    b = Bump((1.0, 0.0), 0.5, 2.0)
    assert b(np.array([1.0, 0.0])) == 2.0
    assert b(np.array([0.0, 0.0])) == 0.0
    c = Combination(((1.0, Constant(1.0)), (2.0, b)))
    assert c(np.array([1.0, 0.0])) == 5.0
    assert datum_from_dict(c.to_dict())(np.array([1.0, 0.0])) == 5.0


def test_load_datum_inline_and_file(tmp_path):
    text = '{"type": "constant", "value": 2.5}'
    assert load_datum(text)(np.zeros((1, 2)))[0] == 2.5
    p = tmp_path / "d.json"
    p.write_text(text)
    assert load_datum(str(p))(np.zeros((1, 2)))[0] == 2.5
    with pytest.raises(ValueError):
        load_datum(str(tmp_path / "missing.json"))
