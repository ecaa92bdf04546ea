"""Homogeneous harmonic polynomials that are even in the last variable."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def _monomials(dim: int, degree: int, even_last: bool = True) -> list[tuple[int, ...]]:
    out = []
    for exps in itertools.product(range(degree + 1), repeat=dim):
        if sum(exps) == degree and (not even_last or exps[-1] % 2 == 0):
            out.append(exps)
    return sorted(out, reverse=True)


def _laplacian_matrix(dim: int, degree: int) -> tuple[np.ndarray, list, list]:
    src = _monomials(dim, degree)
    dst = _monomials(dim, degree - 2) if degree >= 2 else []
    pos = {m: i for i, m in enumerate(dst)}
    L = np.zeros((len(dst), len(src)))
    for j, m in enumerate(src):
        for ax in range(dim):
            if m[ax] >= 2:
                t = list(m)
                t[ax] -= 2
                L[pos[tuple(t)], j] += m[ax] * (m[ax] - 1)
    return L, src, dst


@lru_cache(maxsize=None)
def even_harmonic_basis(n: int, degree: int) -> tuple[tuple, np.ndarray]:
    """Orthonormal (in coefficient space) basis of the even harmonic space.

    Returns the monomial exponent list and a ``(k, m)`` coefficient matrix
    whose rows span the homogeneous harmonic polynomials of ``degree`` in
    ``n + 1`` variables that are even in the last one.
    """
    dim = n + 1
    L, src, _ = _laplacian_matrix(dim, degree)
    if L.shape[0] == 0:
        return tuple(src), np.eye(len(src))
    _, s, vt = np.linalg.svd(L)
    rank = int(np.sum(s > 1e-10 * max(1.0, s.max())))
    basis = vt[rank:]
    # deterministic sign/orientation: reduced row echelon style
    basis = _canonical(basis)
    return tuple(src), basis


def _canonical(B: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(B.T)
    out = q.T
    for i, row in enumerate(out):
        k = int(np.argmax(np.abs(row) > 1e-12))
        if row[k] < 0:
            out[i] = -row
    return out


@dataclass(frozen=True, eq=False)
class HarmonicPolynomial:
    """``sum_k c_k x^(e_k)`` with exponent rows ``e_k`` over ``n + 1`` variables."""

    exponents: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.exponents, dtype=int)
        c = np.asarray(self.coeffs, dtype=float)
        if e.ndim != 2 or e.shape[0] != c.shape[0]:
            raise ValueError("exponents must be (m, n+1) matching coeffs (m,)")
        degrees = set(e.sum(axis=1).tolist())
        if len(degrees) > 1:
            raise ValueError("polynomial is not homogeneous")
        object.__setattr__(self, "exponents", e)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.exponents.shape[1] - 1

    @property
    def degree(self) -> int:
        return int(self.exponents[0].sum()) if len(self.exponents) else 0

    @property
    def homogeneity(self) -> float:
        return float(self.degree)

    @classmethod
    def from_basis(cls, n: int, degree: int, weights) -> "HarmonicPolynomial":
        mons, B = even_harmonic_basis(n, degree)
        return cls(np.array(mons), np.asarray(weights, dtype=float) @ B)

    @classmethod
    def from_terms(cls, terms: dict) -> "HarmonicPolynomial":
        """Build from ``{exponent_tuple: coefficient}``."""
        exps = sorted(terms)
        return cls(np.array(exps), np.array([terms[e] for e in exps]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in zip(self.exponents, self.coeffs):
            if c != 0.0:
                out = out + c * np.prod(x ** e, axis=-1)
        return out

    def laplacian_norm(self) -> float:
        """Coefficient norm of the Laplacian (zero for harmonic input)."""
        L, src, _ = _laplacian_matrix(self.n + 1, self.degree)
        pos = {m: i for i, m in enumerate(src)}
        vec = np.zeros(len(src))
        for e, c in zip(self.exponents, self.coeffs):
            key = tuple(int(v) for v in e)
            if key not in pos:
                return float("inf")
            vec[pos[key]] += c
        return float(np.linalg.norm(L @ vec)) if L.size else 0.0

    def to_dict(self) -> dict:
        return {"type": "harmonic", "exponents": self.exponents.tolist(), "coeffs": self.coeffs.tolist()}
