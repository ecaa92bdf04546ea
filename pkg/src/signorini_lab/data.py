"""Boundary data on the half box and their JSON forms.

Every datum is a callable taking points of shape ``(..., n+1)``.  Closed-form
profiles from :mod:`signorini_lab.catalog` are data too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import profile_from_dict
from .polynomials import HarmonicPolynomial, even_harmonic_basis


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, x):
        return np.full(np.asarray(x).shape[:-1], float(self.value))

    def to_dict(self) -> dict:
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Lift:
    """Smooth step in ``|x_{n+1}|``: 0 on the thin space, 1 for ``|x_{n+1}| >= width``."""

    width: float = 0.5

    def __call__(self, x):
        y = np.abs(np.asarray(x, dtype=float)[..., -1])
        t = np.clip(y / self.width, 0.0, 1.0)
        return t * t * (3.0 - 2.0 * t)

    def to_dict(self) -> dict:
        return {"type": "lift", "width": self.width}


@dataclass(frozen=True)
class Bump:
    """``height * (1 - |x - c|^2 / radius^2)_+^2``, nonnegative and compactly supported."""

    center: tuple
    radius: float
    height: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center, dtype=float)
        y = x.copy()
        y[..., -1] = np.abs(y[..., -1])
        s = 1.0 - np.sum((y - c) ** 2, axis=-1) / self.radius ** 2
        return self.height * np.maximum(s, 0.0) ** 2

    def to_dict(self) -> dict:
        return {"type": "bump", "center": list(self.center), "radius": self.radius, "height": self.height}


@dataclass(frozen=True)
class Combination:
    """Weighted sum ``sum_i w_i g_i``."""

    terms: tuple

    def __call__(self, x):
        out = 0.0
        for w, g in self.terms:
            out = out + w * np.asarray(g(x), dtype=float)
        return out

    def to_dict(self) -> dict:
        return {"type": "sum", "terms": [{"weight": w, "datum": g.to_dict()} for w, g in self.terms]}


def shifted(g0, psi, t: float) -> Combination:
    """``g0 + t psi``."""
    return Combination(((1.0, g0), (float(t), psi)))


@dataclass(frozen=True)
class RandomDatum:
    """Seeded random harmonic boundary datum, nonnegative on the thin boundary.

    ``P = sum_k sum_b c_kb B_kb`` over an orthonormal basis ``B_k`` of even
    homogeneous harmonics of degree ``k = 1..max_degree`` with
    ``c_kb ~ N(0, 1/k)`` from ``numpy.random.default_rng(seed)``.  A constant
    is added so that the minimum of ``P`` over the thin part of the box
    boundary is exactly ``margin``.  Finally a harmonic well
    ``depth * (1 - |x'|^2 + n x_{n+1}^2)``, which is <= 0 on the thin
    boundary, is subtracted with ``depth ~ U(0.5, 2)`` drawn last from the
    same generator; it pushes the thin interior into contact.
    """

    n: int
    seed: int
    max_degree: int = 6
    margin: float = 0.05

    def _poly(self):
        rng = np.random.default_rng(self.seed)
        polys = []
        for k in range(1, self.max_degree + 1):
            mons, B = even_harmonic_basis(self.n, k)
            c = rng.normal(0.0, 1.0 / np.sqrt(k), size=B.shape[0])
            polys.append(HarmonicPolynomial(np.array(mons), c @ B))
        return polys, float(rng.uniform(0.5, 2.0))

    def _well(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 - np.sum(x[..., :-1] ** 2, axis=-1) + self.n * x[..., -1] ** 2

    def _shift(self, polys) -> float:
        s = np.linspace(-1.0, 1.0, 2001)
        if self.n == 1:
            pts = np.array([[-1.0, 0.0], [1.0, 0.0]])
        else:
            edges = [np.stack([np.full_like(s, a), s, np.zeros_like(s)], -1) for a in (-1.0, 1.0)]
            edges += [np.stack([s, np.full_like(s, a), np.zeros_like(s)], -1) for a in (-1.0, 1.0)]
            pts = np.concatenate(edges)
        vals = sum(p(pts) for p in polys)
        return self.margin - float(np.min(vals))

    def __call__(self, x):
        polys, depth = self._poly()
        c = self._shift(polys)
        return sum(p(x) for p in polys) + c - depth * self._well(x)

    def to_dict(self) -> dict:
        return {"type": "random", "n": self.n, "seed": self.seed,
                "max_degree": self.max_degree, "margin": self.margin}


def datum_from_dict(d: dict):
    kind = d.get("type")
    if kind == "constant":
        return Constant(float(d.get("value", 1.0)))
    if kind == "lift":
        return Lift(float(d.get("width", 0.5)))
    if kind == "bump":
        return Bump(tuple(d["center"]), float(d["radius"]), float(d.get("height", 1.0)))
    if kind == "sum":
        return Combination(tuple((float(t.get("weight", 1.0)), datum_from_dict(t["datum"])) for t in d["terms"]))
    if kind == "random":
        return RandomDatum(int(d["n"]), int(d["seed"]), int(d.get("max_degree", 6)), float(d.get("margin", 0.05)))
    return profile_from_dict(d)


def load_datum(source: str):
    """Parse a datum from inline JSON or from a JSON file path."""
    text = source.strip()
    if not text.startswith("{"):
        path = Path(source)
        if not path.is_file():
            raise ValueError(f"datum {source!r} is neither JSON nor an existing file")
        text = path.read_text()
    return datum_from_dict(json.loads(text))


def datum_to_json(g) -> str:
    return json.dumps(g.to_dict(), sort_keys=True)
