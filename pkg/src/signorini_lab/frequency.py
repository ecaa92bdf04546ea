"""Almgren frequency profiles, growth bounds, and the ``u - p`` variant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, FrequencySettings
from .errors import PreconditionError
from .geometry import ScalarField, ball_grad_sq_profile, sphere_samples


@dataclass(frozen=True, eq=False)
class FrequencyProfile:
    """Sampled ``r -> (H, D, phi[, F])`` curves around one center.

    ``kappa_hat`` is the extrapolated frequency at ``r -> 0`` (``None`` when
    the field is degenerate near the center); ``flagged`` marks profiles
    where the small-radius fit and the direct reading disagree.
    """

    center: np.ndarray
    h: float
    radii: np.ndarray
    H: np.ndarray
    D: np.ndarray
    phi: np.ndarray
    F: np.ndarray | None
    kappa_hat: float | None
    kappa_star: float | None
    kappa_fit: float | None
    flagged: bool
    reliable: bool
    violations: int
    pairs: int
    settings: FrequencySettings = DEFAULT.frequency

    def _loglog(self, values: np.ndarray, r: float) -> float:
        lr = np.log(self.radii)
        x = math.log(r)
        if not lr[0] - 1e-9 <= x <= lr[-1] + 1e-9:
            raise ValueError(f"radius {r} outside profile range [{self.radii[0]}, {self.radii[-1]}]")
        return float(np.interp(x, lr, values))

    def phi_at(self, r: float) -> float:
        return self._loglog(self.phi, r)

    def H_at(self, r: float) -> float:
        return float(np.exp(self._loglog(np.log(self.H), r)))

    def rows(self) -> list[tuple]:
        cols = [self.radii, self.H, self.D, self.phi]
        if self.F is not None:
            cols.append(self.F)
        return [tuple(float(c[j]) for c in cols) for j in range(len(self.radii))]

    def columns(self) -> list[str]:
        return ["r", "H", "D", "phi"] + (["F"] if self.F is not None else [])


def profile_radii(h: float, r_max: float, settings: FrequencySettings = DEFAULT.frequency) -> np.ndarray:
    r0 = settings.r_min_cells * h
    if r_max < r0:
        raise ValueError(f"r_max={r_max} is below the smallest usable radius {r0}")
    count = int(math.floor(math.log(r_max / r0) / math.log(settings.ratio) + 1e-9)) + 1
    return r0 * settings.ratio ** np.arange(count)


def _H(field: ScalarField, center, r: float) -> float:
    v, w, _ = sphere_samples(field, center, r)
    return float(np.dot(w, v * v)) / r ** field.grid.n


def _count_violations(radii, phi, h, s: FrequencySettings) -> tuple[int, int]:
    bad = 0
    pairs = 0
    for i in range(len(radii)):
        eps = max(s.slack_floor, s.slack_cells * h / radii[i])
        later = phi[i + 1:]
        pairs += len(later)
        bad += int(np.sum(later < phi[i] - eps))
    return bad, pairs


def _extrapolate(field, center, radii, phi, s: FrequencySettings):
    h = field.grid.h
    r_star = s.kappa_cells * h
    k_star = None
    if r_star <= radii[-1] + 1e-12:
        H = _H(field, center, r_star)
        D = ball_grad_sq_profile(field, center, [r_star])[0] * r_star ** (1 - field.grid.n)
        k_star = D / H if H > 0 else None
    k_fit = None
    m = min(s.fit_points, len(radii))
    if m >= 2:
        slope, intercept = np.polyfit(radii[:m], phi[:m], 1)
        k_fit = float(intercept)
    if k_star is None:
        return k_fit, None, k_fit, k_fit is not None
    if k_fit is not None and abs(k_fit - k_star) < s.fit_agree:
        return k_fit, k_star, k_fit, False
    return k_star, k_star, k_fit, True


def _build(field: ScalarField, center, r_max: float, scale: float,
           settings: FrequencySettings, F_fn=None, zero: bool = False) -> FrequencyProfile:
    grid = field.grid
    center = np.asarray(center, dtype=float)
    radii = profile_radii(grid.h, r_max, settings)
    n = grid.n
    H = np.array([_H(field, center, r) for r in radii])
    D = ball_grad_sq_profile(field, center, radii) * radii ** (1 - n)
    floor = settings.degenerate_floor * max(scale, np.finfo(float).tiny)
    degenerate = zero or bool(np.any(H <= floor))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(H > floor, D / np.where(H > 0, H, 1.0), np.nan)
    F = None
    if F_fn is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            F = np.array([F_fn(r) for r in radii]) * radii / np.where(H > 0, H * radii ** n, np.nan)
    if degenerate:
        return FrequencyProfile(center, grid.h, radii, H, D, phi, F, None, None, None,
                                False, False, 0, 0, settings)
    bad, pairs = _count_violations(radii, phi, grid.h, settings)
    k_hat, k_star, k_fit, flagged = _extrapolate(field, center, radii, phi, settings)
    reliable = pairs == 0 or bad / pairs <= settings.max_violation_fraction
    return FrequencyProfile(center, grid.h, radii, H, D, phi, F, k_hat, k_star, k_fit,
                            flagged, bool(reliable), bad, pairs, settings)


def _field_of(obj) -> ScalarField:
    return getattr(obj, "u", obj)


def frequency_profile(field, center, r_max: float,
                      settings: FrequencySettings | None = None) -> FrequencyProfile:
    """Frequency profile of ``field`` on radii ``4h * ratio**j <= r_max``.

    A field that vanishes near ``center`` yields ``reliable=False`` and
    ``kappa_hat=None`` rather than an exception.
    """
    field = _field_of(field)
    settings = settings or DEFAULT.frequency
    scale = float(np.max(field.values ** 2)) if field.values.size else 0.0
    return _build(field, center, r_max, scale, settings)


def _ball_max(field: ScalarField, center, r: float) -> float:
    pts = field.grid.points()
    d2 = np.sum((pts[..., : field.grid.n] - center[: field.grid.n]) ** 2, axis=-1) + pts[..., -1] ** 2
    inside = d2 <= r * r
    return float(np.max(np.abs(field.values[inside]))) if np.any(inside) else 0.0


def w_frequency_profile(u, p, center, r_max: float, contact_threshold: float | None = None,
                        settings: FrequencySettings | None = None) -> FrequencyProfile:
    """Frequency profile of ``w = u - p`` with the correction term ``F``.

    ``F(r) = r * int_{B_r} w Lap w / int_{dB_r} w^2``.  The Laplacian of a
    Signorini solution is a measure on the contact set, so the numerator is
    the sum of ``-p * (discrete Lap u) * h^(n+1)`` over contact thin nodes
    inside the ball.
    """
    from .solver import discrete_laplacian

    u = _field_of(u)
    settings = settings or DEFAULT.frequency
    grid = u.grid
    center = np.asarray(center, dtype=float)
    if abs(center[grid.n]) > 1e-12:
        raise PreconditionError("w-profiles are centered on the thin space")
    p_vals = np.asarray(p(grid.points()), dtype=float)
    w = ScalarField(grid, u.values - p_vals)
    if contact_threshold is None:
        contact_threshold = max(1e-9, grid.h ** 3)
    lap = discrete_laplacian(u.values, grid.h)[..., 0]
    thin_pts = grid.thin_points()
    contact = u.thin_values <= contact_threshold
    interior = np.ones_like(contact)
    for ax in range(grid.n):
        sl = [slice(None)] * grid.n
        sl[ax] = 0
        interior[tuple(sl)] = False
        sl[ax] = -1
        interior[tuple(sl)] = False
    density = np.where(contact & interior, -p_vals[..., 0] * lap, 0.0) * grid.h ** (grid.n + 1)
    dist = np.sqrt(np.sum((thin_pts[..., : grid.n] - center[: grid.n]) ** 2, axis=-1))

    def F_num(r):
        return float(np.sum(density[dist < r]))

    u_max = _ball_max(u, center, r_max)
    zero = _ball_max(w, center, r_max) <= settings.w_zero_floor * max(u_max, np.finfo(float).tiny)
    return _build(w, center, r_max, u_max ** 2, settings, F_fn=F_num, zero=zero)


def _slack(r: float, R: float, settings: FrequencySettings) -> float:
    return settings.growth_exponent * math.log(R / r)


def growth_check(profile: FrequencyProfile, r: float, R: float) -> tuple[bool, bool]:
    """Check ``(R/r)^(2 phi(r)) <= H(R)/H(r) <= (R/r)^(2 phi(R))`` up to slack."""
    if not r < R:
        raise ValueError("need r < R")
    L = math.log(R / r)
    ratio = math.log(profile.H_at(R) / profile.H_at(r))
    s = _slack(r, R, profile.settings)
    lower = ratio >= 2.0 * profile.phi_at(r) * L - s
    upper = ratio <= 2.0 * profile.phi_at(R) * L + s
    return bool(lower), bool(upper)


def log_C_delta(lam_lo: float, lam_hi: float, delta: float) -> float:
    """``log C_delta`` for the bound ``sqrt(2(hi-lo) L) <= delta L + C``.

    Minimizing over ``L`` gives ``C = (hi - lo) / (2 delta)``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    return max(0.0, lam_hi - lam_lo) / (2.0 * delta)


def growth_check_w(profile: FrequencyProfile, r: float, R: float, delta: float) -> tuple[bool, bool]:
    """Growth bounds for ``H(., u - p)`` with the ``C_delta`` allowance."""
    if not r < R:
        raise ValueError("need r < R")
    L = math.log(R / r)
    ratio = math.log(profile.H_at(R) / profile.H_at(r))
    s = _slack(r, R, profile.settings)
    lo, hi = profile.phi_at(r), profile.phi_at(R)
    lower = ratio >= 2.0 * lo * L - s
    upper = ratio <= log_C_delta(lo, hi, delta) + (2.0 * hi + delta) * L + s
    return bool(lower), bool(upper)
