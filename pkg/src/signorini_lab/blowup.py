"""Blow-ups at free boundary points: quadratic, second-order, and cubic fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import CubicProfile, QuadraticProfile, harmonic_trace_ratio
from .config import DEFAULT, AnalysisConfig
from .errors import NotQuadraticPointError, PreconditionError
from .frequency import FrequencyProfile, frequency_profile, w_frequency_profile
from .geometry import ScalarField, interpolate, sphere_rule
from .polynomials import HarmonicPolynomial, even_harmonic_basis


def _field_of(obj) -> ScalarField:
    return getattr(obj, "u", obj)


def _rmax(grid, x0) -> float:
    return min(0.5, grid.clearance(x0) - grid.h, 1.0 - grid.h)


def point_frequency(u: ScalarField, x0, config: AnalysisConfig = DEFAULT) -> FrequencyProfile:
    return frequency_profile(u, x0, _rmax(u.grid, np.asarray(x0, dtype=float)), config.frequency)


def _gate(u, x0, band, kappa_hat, config) -> float:
    if kappa_hat is None:
        prof = point_frequency(u, x0, config)
        kappa_hat = prof.kappa_hat
    if kappa_hat is None or not band[0] <= kappa_hat <= band[1]:
        raise PreconditionError(f"frequency {kappa_hat} at {list(x0)} outside [{band[0]}, {band[1]}]")
    return float(kappa_hat)


def _unit_sphere(n: int, resolution: float):
    pts, wts = sphere_rule(n, np.zeros(n + 1), 1.0, resolution)
    return pts, wts


def _samples(u: ScalarField, x0, r: float):
    """Unit-sphere directions, weights, and ``u(x0 + r w)``."""
    dirs, wts = _unit_sphere(u.grid.n, u.grid.h / r)
    vals = interpolate(u, x0 + r * dirs, order=3)
    return dirs, wts, vals


# --- rescaling sequences ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class BlowupSequence:
    center: np.ndarray
    radii: np.ndarray
    points: np.ndarray          # reference points in the unit ball
    values: np.ndarray          # (len(radii), len(points)) rescaled samples
    norms: np.ndarray           # ||u(center + r .)||_{L2(dB1)}
    unit_norms: np.ndarray      # L2(dB1) norm of each rescaled field


def blowup_sequence(u, x0, radii, reference_points=None) -> BlowupSequence:
    """Rescalings ``u(x0 + r x) / ||u(x0 + r .)||_{L2(dB1)}``.

    Norms use the same sphere rule as the frequency quadrature.
    """
    u = _field_of(u)
    x0 = np.asarray(x0, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if reference_points is None:
        reference_points, _ = _unit_sphere(u.grid.n, 1.0 / 16)
    ref = np.asarray(reference_points, dtype=float)
    norms, unit, rows = [], [], []
    for r in radii:
        dirs, w, vals = _samples(u, x0, r)
        nrm = math.sqrt(float(np.dot(w, vals * vals)))
        if nrm == 0.0:
            raise PreconditionError(f"u vanishes on the sphere of radius {r}")
        norms.append(nrm)
        unit.append(math.sqrt(float(np.dot(w, (vals / nrm) ** 2))))
        rows.append(interpolate(u, x0 + r * ref, order=3) / nrm)
    return BlowupSequence(x0, radii, ref, np.array(rows), np.array(norms), np.array(unit))


# --- first blow-up -----------------------------------------------------------

def _sym_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def _quad_design(dirs: np.ndarray, n: int) -> np.ndarray:
    cols = []
    for E in _sym_basis(n):
        cols.append(QuadraticProfile(E)(dirs))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True, eq=False)
class FirstBlowup:
    profile: QuadraticProfile
    radii: np.ndarray
    residuals: np.ndarray        # L_inf misfit of u(x0 + r.)/r^2 at each radius
    clip: float                  # amount the smallest eigenvalue was raised
    degenerate: bool             # fit indistinguishable from zero
    kappa_hat: float

    @property
    def residual_rate(self) -> np.ndarray:
        return self.residuals

    @property
    def residual_decreasing(self) -> bool:
        """Residuals shrink as r decreases (radii are stored increasing)."""
        return bool(np.all(np.diff(self.residuals) >= -1e-12))


def first_blowup_quadratic(u, x0, kappa_hat: float | None = None,
                           config: AnalysisConfig = DEFAULT) -> FirstBlowup:
    """Fit ``p in P2`` to ``u(x0 + r.)/r^2`` on spheres of radius 8h, 12h, 16h.

    The fit uses the sphere-rule weights, so it is the L2(dB1) projection
    onto even quadratic harmonics.  Raises :class:`NotQuadraticPointError`
    when the fitted matrix has an eigenvalue clearly below zero.
    """
    u = _field_of(u)
    x0 = np.asarray(x0, dtype=float)
    s = config.blowup
    kappa_hat = _gate(u, x0, config.bands.quadratic, kappa_hat, config)
    n = u.grid.n
    radii = np.array(s.quadratic_cells, dtype=float) * u.grid.h
    rows, rhs, wts, per_r = [], [], [], []
    for r in radii:
        dirs, w, vals = _samples(u, x0, r)
        X = _quad_design(dirs, n)
        rows.append(X)
        rhs.append(vals / r ** 2)
        wts.append(w)
        per_r.append((X, vals / r ** 2))
    X = np.concatenate(rows)
    y = np.concatenate(rhs)
    sw = np.sqrt(np.concatenate(wts))
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    A = sum(c * E for c, E in zip(coef, _sym_basis(n)))
    residuals = np.array([float(np.max(np.abs(Xr @ coef - yr))) for Xr, yr in per_r])
    fit_res = float(residuals[0])
    evals, evecs = np.linalg.eigh(A)
    size = float(np.max(np.abs(evals))) if evals.size else 0.0
    if size < 10.0 * fit_res:
        return FirstBlowup(QuadraticProfile(np.zeros((n, n))), radii, residuals, 0.0, True, kappa_hat)
    if evals[0] < -10.0 * fit_res and evals[0] < -s.eig_clip:
        raise NotQuadraticPointError(
            f"fitted first blow-up has eigenvalue {evals[0]:.3e} (fit residual {fit_res:.3e})")
    clipped = np.maximum(evals, 0.0)
    clip = float(np.max(clipped - evals))
    A = (evecs * clipped) @ evecs.T
    return FirstBlowup(QuadraticProfile(A), radii, residuals, clip, False, kappa_hat)


# --- second blow-up ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SecondBlowupLabel:
    lambda_hat: float | None
    label: str                   # ordinary | anomalous | unresolved
    q: HarmonicPolynomial | None = None
    profile: FrequencyProfile | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"lambda_hat": self.lambda_hat, "label": self.label,
                "q": None if self.q is None else self.q.to_dict()}


def label_for(lam: float | None, config: AnalysisConfig = DEFAULT) -> str:
    s = config.blowup
    if lam is None or not math.isfinite(lam):
        return "unresolved"
    if lam >= s.ordinary_min:
        return "ordinary"
    if lam >= s.anomalous_min:
        return "anomalous"
    return "unresolved"


def project_harmonic(w, x0, r: float, degree: int) -> HarmonicPolynomial:
    """L2(dB_r) projection of ``w(x0 + .)`` onto even harmonics of ``degree``, rescaled by ``r^degree``."""
    w = _field_of(w)
    n = w.grid.n
    dirs, wts, vals = _samples(w, np.asarray(x0, dtype=float), r)
    mons, B = even_harmonic_basis(n, degree)
    poly_vals = np.stack([HarmonicPolynomial(np.array(mons), row)(dirs) for row in B], axis=-1)
    sw = np.sqrt(wts)
    coef, *_ = np.linalg.lstsq(poly_vals * sw[:, None], vals * sw / r ** degree, rcond=None)
    return HarmonicPolynomial.from_basis(n, degree, coef)


def second_blowup(u, x0, p2: QuadraticProfile, contact_threshold: float | None = None,
                  config: AnalysisConfig = DEFAULT) -> SecondBlowupLabel:
    """Frequency of ``u - p2`` at ``x0`` and the ordinary/anomalous label."""
    u = _field_of(u)
    x0 = np.asarray(x0, dtype=float)
    prof = w_frequency_profile(u, p2, x0, _rmax(u.grid, x0), contact_threshold, config.frequency)
    if not prof.reliable or prof.kappa_hat is None:
        return SecondBlowupLabel(prof.kappa_hat, "unresolved", None, prof)
    lam = float(prof.kappa_hat)
    label = label_for(lam, config)
    q = None
    if label != "unresolved":
        degree = max(2, int(round(lam)))
        w = ScalarField(u.grid, u.values - p2(u.grid.points()))
        q = project_harmonic(w, x0, config.blowup.projection_cells * u.grid.h, degree)
    return SecondBlowupLabel(lam, label, q, prof)


# --- orthogonality -----------------------------------------------------------

def probe_family(n: int) -> list[tuple[str, QuadraticProfile]]:
    """Finite family of P2 members used as test functions.

    Coordinate forms ``C (x1^2 + xi^2 - 2 y^2) + t x1 xi`` (``|t| <= 2C``
    keeps them nonnegative on the thin space) and the diagonal forms
    ``xi^2 - y^2`` and ``|x'|^2 - n y^2``.
    """
    out = []
    for i in range(n):
        D = np.zeros((n, n))
        D[i, i] = 1.0
        out.append((f"diag{i + 1}", QuadraticProfile(D)))
    out.append(("trace", QuadraticProfile(np.eye(n))))
    for i in range(1, n):
        for t in (-2.0, -1.0, 0.0, 1.0, 2.0):
            A = np.zeros((n, n))
            A[0, 0] = A[i, i] = 1.0
            A[0, i] = A[i, 0] = t / 2.0
            out.append((f"coord{i + 1}_t{t:+g}", QuadraticProfile(A)))
    if n == 1:
        out.append(("coord1", QuadraticProfile(np.array([[2.0]]))))
    return out


@dataclass(frozen=True)
class OrthogonalityReport:
    equality_residual: float
    p2_norm: float
    q_norm: float
    inequality_values: list      # (label, int p q, ||p|| ||q||)

    def equality_ok(self, rel: float) -> bool:
        return abs(self.equality_residual) <= rel * self.p2_norm * self.q_norm

    def inequalities_ok(self, rel: float) -> bool:
        return all(v <= rel * nrm for _, v, nrm in self.inequality_values)


def sphere_inner(f, g, n: int) -> float:
    """``int_{dB1} f g`` with a rule exact for polynomials of degree <= 8."""
    pts, wts = _unit_sphere(n, 1.0 / 16)
    return float(np.dot(wts, f(pts) * g(pts)))


def orthogonality_check(p2: QuadraticProfile, q) -> OrthogonalityReport:
    """Sphere integrals of ``p2 q`` and of ``p q`` over the probe family."""
    n = p2.n
    nq = math.sqrt(sphere_inner(q, q, n))
    vals = []
    for label, p in probe_family(n):
        vals.append((label, sphere_inner(p, q, n), math.sqrt(sphere_inner(p, p, n)) * nq))
    return OrthogonalityReport(sphere_inner(p2, q, n), math.sqrt(sphere_inner(p2, p2, n)), nq, vals)


# --- cubic fit ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CubicFit:
    profile: CubicProfile
    alpha_hat: float
    radii: np.ndarray
    linf: np.ndarray              # ||u - p3||_{L_inf(B_r)} / r^3
    fit_residual: float
    projection_shift: float
    flagged: bool
    kappa_hat: float


def _ball_linf(u: ScalarField, x0, r: float, p) -> float:
    grid = u.grid
    pts = grid.points()
    rel = pts.copy()
    rel[..., : grid.n] -= x0[: grid.n]
    d2 = np.sum(rel ** 2, axis=-1)
    inside = d2 <= r * r
    return float(np.max(np.abs(u.values[inside] - p(rel[inside]))))


def cubic_fit(u, x0, kappa_hat: float | None = None, config: AnalysisConfig = DEFAULT) -> CubicFit:
    """Least-squares fit of ``p3 = |y|(a y^2 - x'A x')`` on node shells 8h..24h.

    Samples are the grid nodes within h/2 of each sphere, each shell given
    equal weight.  ``a`` is tied to ``tr A`` by the harmonicity oracle;
    ``A`` is then projected onto the PSD cone.  ``alpha_hat`` is the slope
    of ``log(||u - p3||_inf(B_r) / r^3)`` against ``log r``.
    """
    u = _field_of(u)
    x0 = np.asarray(x0, dtype=float)
    kappa_hat = _gate(u, x0, config.bands.cubic, kappa_hat, config)
    n = u.grid.n
    ratio = harmonic_trace_ratio(n)
    radii = np.array(config.blowup.cubic_cells, dtype=float) * u.grid.h
    basis = _sym_basis(n)
    # grid nodes in shells of width h around each radius: no interpolation
    # across the kink at the thin space
    pts = u.grid.points()
    rel = pts.copy()
    rel[..., : n] -= x0[:n]
    dist = np.sqrt(np.sum(rel ** 2, axis=-1))
    X_rows, y_rows, per_r = [], [], []
    for r in radii:
        shell = np.abs(dist - r) <= 0.5 * u.grid.h
        d = rel[shell]
        X = np.stack([CubicProfile(np.trace(E) / ratio, E)(d) for E in basis], axis=-1) / r ** 3
        yv = u.values[shell] / r ** 3
        X_rows.append(X / math.sqrt(len(yv)))
        y_rows.append(yv / math.sqrt(len(yv)))
        per_r.append((X, yv))
    coef, *_ = np.linalg.lstsq(np.concatenate(X_rows), np.concatenate(y_rows), rcond=None)
    A = sum(c * E for c, E in zip(coef, basis))
    fit_res = max(float(np.max(np.abs(Xr @ coef - yr))) for Xr, yr in per_r)
    evals, evecs = np.linalg.eigh(A)
    shift = float(np.max(np.maximum(evals, 0.0) - evals))
    A = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    prof = CubicProfile(float(np.trace(A)) / ratio, A)
    scale = max(1.0, float(np.max(np.abs(u.values))))
    linf = np.array([_ball_linf(u, x0, r, prof) for r in radii]) / radii ** 3
    floor = 1e-10 * scale / radii ** 3
    if np.all(linf <= floor):
        alpha = math.inf
    else:
        keep = linf > floor
        if np.sum(keep) >= 2:
            alpha = float(np.polyfit(np.log(radii[keep]), np.log(linf[keep]), 1)[0])
        else:
            alpha = math.inf
    return CubicFit(prof, alpha, radii, linf, fit_res, shift, shift > fit_res + 1e-12, kappa_hat)
