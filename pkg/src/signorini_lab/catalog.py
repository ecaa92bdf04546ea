"""Closed-form homogeneous solutions and blow-up profile classes.

Three families are provided:

* :class:`HalfPlaneSolution`, the two-dimensional homogeneous solutions
  (extended trivially in the remaining thin directions), one for every
  homogeneity in ``S = {1, 3/2, 2, 3, 7/2, 4, ...}``;
* :class:`QuadraticProfile`, even 2-homogeneous harmonic polynomials
  ``x'.A x' - tr(A) x_{n+1}^2``;
* :class:`CubicProfile`, ``|x_{n+1}| (a x_{n+1}^2 - x'.A x')``.

All profiles evaluate on arrays of points with shape ``(..., n+1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

PSD_TOL = 1e-10


def _in_S(kappa: float, tol: float = 1e-12) -> bool:
    if kappa >= 1 - tol and abs(kappa - round(kappa)) <= tol:
        return True
    m = (kappa + 0.5) / 2.0
    return m >= 1 - tol and abs(m - round(m)) <= tol


def nearest_in_S(kappa: float) -> float:
    """Element of S closest to ``kappa`` (ties go to the smaller one)."""
    cands = [1.0, float(max(1, math.floor(kappa))), float(max(1, math.ceil(kappa)))]
    m = max(1, math.floor((kappa + 0.5) / 2.0))
    cands += [2.0 * m - 0.5, 2.0 * (m + 1) - 0.5]
    return min(sorted(set(cands)), key=lambda s: abs(s - kappa))


def is_admissible_homogeneity(kappa: float, tol: float) -> tuple[bool, float]:
    """Whether ``kappa`` is within ``tol`` of S, and the nearest element."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    s = nearest_in_S(kappa)
    return abs(kappa - s) <= tol, s


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., :-1], x[..., -1]


@dataclass(frozen=True)
class HalfPlaneSolution:
    """``kappa``-homogeneous solution depending on ``(x'.e, |x_{n+1}|)`` only.

    With ``z = x'.e + i|x_{n+1}|`` (argument in ``[0, pi]``):
    half-integers and even integers use ``Re z^kappa``; odd integers use
    ``-Im z^kappa``, which vanishes on the whole thin space.
    """

    kappa: float
    direction: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if not _in_S(self.kappa):
            raise ValueError(f"homogeneity {self.kappa} is not in S")
        e = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(e))
        if norm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "direction", tuple(float(v) for v in e / norm))

    @property
    def n(self) -> int:
        return len(self.direction)

    @property
    def homogeneity(self) -> float:
        return self.kappa

    def __call__(self, x):
        xp, y = _split(x)
        s = xp @ np.asarray(self.direction)
        ay = np.abs(y)
        rho = np.hypot(s, ay)
        theta = np.arctan2(ay, s)
        k = self.kappa
        mag = rho ** k
        if abs(k - round(k)) < 1e-12 and int(round(k)) % 2 == 1:
            return -mag * np.sin(k * theta)
        return mag * np.cos(k * theta)

    def to_dict(self) -> dict:
        return {"type": "halfplane", "kappa": self.kappa, "direction": list(self.direction)}


@dataclass(frozen=True)
class QuadraticProfile:
    """``p(x) = x'.A x' - tr(A) x_{n+1}^2``; a member of P2 when ``A >= 0``."""

    A: np.ndarray = field(compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def homogeneity(self) -> float:
        return 2.0

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.A)[0])

    @property
    def in_P2(self) -> bool:
        return self.min_eigenvalue >= -PSD_TOL

    @property
    def is_zero(self) -> bool:
        return not np.any(self.A)

    def __call__(self, x):
        xp, y = _split(x)
        return np.einsum("...i,ij,...j->...", xp, self.A, xp) - np.trace(self.A) * y * y

    def to_dict(self) -> dict:
        return {"type": "quadratic", "A": self.A.tolist()}


@lru_cache(maxsize=None)
def harmonic_trace_ratio(n: int, step: float = 1e-4) -> float:
    """Ratio ``tr(A)/a`` making ``x_{n+1}(a x_{n+1}^2 - x'.A x')`` harmonic.

    Determined by finite differences rather than assumed: the Laplacian of
    each basis term is measured at a point with ``x_{n+1} > 0`` and the
    ratio is snapped to the nearest fraction with a small denominator.
    """
    x0 = np.full(n + 1, 0.3)
    x0[-1] = 0.7

    def lap(f):
        tot = 0.0
        for d in range(n + 1):
            e = np.zeros(n + 1)
            e[d] = step
            tot += (f(x0 + e) + f(x0 - e) - 2.0 * f(x0)) / step ** 2
        return tot

    lap_a = lap(lambda x: x[-1] ** 3)
    lap_tr = lap(lambda x: x[-1] * float(x[:-1] @ x[:-1]) / n)
    raw = -lap_a / -lap_tr
    snapped = float(Fraction(raw).limit_denominator(12))
    if abs(snapped - raw) > 1e-5 * abs(raw):
        raise RuntimeError(f"harmonicity oracle gave a non-rational ratio {raw}")
    return snapped


@dataclass(frozen=True)
class CubicProfile:
    """``p3(x) = |x_{n+1}| (a x_{n+1}^2 - x'.A x')``.

    The raw constructor accepts any ``(a, A)`` so invalid profiles can be
    validated; :meth:`from_matrix` builds the harmonic member for a given
    ``A`` using :func:`harmonic_trace_ratio`.
    """

    a: float
    A: np.ndarray = field(compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def from_matrix(cls, A) -> "CubicProfile":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(float(np.trace(A)) / harmonic_trace_ratio(A.shape[0]), A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def homogeneity(self) -> float:
        return 3.0

    @property
    def trace_defect(self) -> float:
        return float(np.trace(self.A)) - harmonic_trace_ratio(self.n) * self.a

    def __call__(self, x):
        xp, y = _split(x)
        quad = np.einsum("...i,ij,...j->...", xp, self.A, xp)
        return np.abs(y) * (self.a * y * y - quad)

    def to_dict(self) -> dict:
        return {"type": "cubic", "a": self.a, "A": self.A.tolist()}


def evaluate(profile, x):
    """Closed-form value of ``profile`` at ``x``; even in ``x_{n+1}``."""
    return profile(x)


def profile_from_dict(d: dict):
    kind = d.get("type")
    if kind == "halfplane":
        return HalfPlaneSolution(float(d["kappa"]), tuple(d.get("direction", (1.0,))))
    if kind == "quadratic":
        return QuadraticProfile(np.asarray(d["A"], dtype=float))
    if kind == "cubic":
        if "a" in d:
            return CubicProfile(float(d["a"]), np.asarray(d["A"], dtype=float))
        return CubicProfile.from_matrix(np.asarray(d["A"], dtype=float))
    if kind == "harmonic":
        from .polynomials import HarmonicPolynomial

        return HarmonicPolynomial(np.asarray(d["exponents"]), np.asarray(d["coeffs"]))
    raise ValueError(f"unknown profile type {kind!r}")


def profile_to_json(profile) -> str:
    return json.dumps(profile.to_dict(), sort_keys=True)


def profile_from_json(text: str):
    return profile_from_dict(json.loads(text))


def canonical_catalog(n: int) -> list:
    """The profiles used as golden references in dimension ``n``."""
    e = (1.0,) + (0.0,) * (n - 1)
    out = [HalfPlaneSolution(k, e) for k in (1.0, 1.5, 2.0, 3.0, 3.5, 4.0)]
    out.append(QuadraticProfile(np.diag([1.0] + [0.0] * (n - 1))))
    out.append(CubicProfile.from_matrix(np.diag([1.0] + [0.0] * (n - 1))))
    if n == 2:
        out.append(QuadraticProfile(np.array([[1.0, 0.3], [0.3, 0.5]])))
        out.append(CubicProfile.from_matrix(np.array([[2.0, 0.5], [0.5, 1.0]])))
    return out


# --- validation ---------------------------------------------------------

@dataclass
class ValidationReport:
    checks: dict[str, float]
    tol: float
    scale: float

    @property
    def valid(self) -> bool:
        return all(v <= self.tol for v in self.checks.values())

    @property
    def max_violation(self) -> float:
        return max(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if v > self.tol]


def _directions(rng, count: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def thin_lattice(n: int, per_axis: int = 41) -> np.ndarray:
    """Thin-space lattice points in the closed unit ball (last coord 0)."""
    ax = np.linspace(-1.0, 1.0, per_axis)
    mesh = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    mesh = mesh[np.sum(mesh ** 2, axis=1) <= 1.0 + 1e-12]
    return np.concatenate([mesh, np.zeros((len(mesh), 1))], axis=1)


def validate_solution(profile, samples: int = 2000, step: float = 1e-4,
                      tol: float = 1e-6, seed: int = 0) -> ValidationReport:
    """Check a homogeneous profile against the Signorini conditions.

    Sampling covers the annulus ``1/2 <= |x| <= 1`` (enough by homogeneity)
    off the thin space, random thin points and a thin lattice.  Violations
    are normalized by the maximum of ``|p|`` on the unit sphere.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    n = profile.n
    dim = n + 1
    rng = np.random.default_rng(seed)
    sphere = _directions(rng, 4096, dim)
    scale = float(np.max(np.abs(profile(sphere)))) or 1.0
    kappa = profile.homogeneity

    # (i) harmonicity off the thin space
    pts = _directions(rng, samples, dim) * rng.uniform(0.5, 1.0, (samples, 1))
    pts[:, -1] = np.sign(pts[:, -1] + 1e-300) * np.maximum(np.abs(pts[:, -1]), 4 * step)
    lap = np.zeros(samples)
    base = profile(pts)
    for d in range(dim):
        e = np.zeros(dim)
        e[d] = step
        lap += (profile(pts + e) + profile(pts - e) - 2.0 * base) / step ** 2
    harm = float(np.max(np.abs(lap))) / scale

    # thin-space samples: random points plus a lattice hitting lower-dim contact sets
    rnd = _directions(rng, samples, n) * rng.uniform(0.0, 1.0, (samples, 1)) ** (1.0 / n)
    thin = np.concatenate([np.concatenate([rnd, np.zeros((samples, 1))], axis=1),
                           thin_lattice(n)], axis=0)
    p0 = profile(thin)
    up = thin.copy()
    up[:, -1] = step
    up2 = thin.copy()
    up2[:, -1] = 2 * step
    dy = (-3.0 * p0 + 4.0 * profile(up) - profile(up2)) / (2.0 * step)

    positivity = float(np.max(np.maximum(-p0, 0.0))) / scale
    contact = p0 <= tol * scale
    sign = float(np.max(np.maximum(dy[contact], 0.0), initial=0.0)) / scale
    compl = float(np.max(np.abs(p0 * dy))) / scale ** 2

    homog = 0.0
    for lam in (0.5, 2.0):
        hv = np.abs(profile(lam * pts) - lam ** kappa * base) / (lam ** kappa * scale)
        homog = max(homog, float(np.max(hv)))

    checks = {
        "harmonic_off_thin": harm,
        "nonnegative_on_thin": positivity,
        "normal_derivative_sign": sign,
        "complementarity": compl,
        "homogeneity": homog,
    }
    return ValidationReport(checks=checks, tol=tol, scale=scale)
