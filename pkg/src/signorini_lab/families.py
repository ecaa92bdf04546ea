"""Monotone families ``g_t = g0 + t psi`` and the diagnostics run on them."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import shifted
from .errors import FamilyError, InsufficientRangeError, NotConvergedError, PreconditionError
from .geometry import Grid, interpolate, sphere_rule
from .solver import DEFAULT_MAX_ITERS, DEFAULT_OMEGA, DEFAULT_TOL, SignoriniProblem, SolveResult, solve
from .strata import extract_free_boundary

log = logging.getLogger(__name__)

THREADS_ENV = "SIGNORINI_THREADS"
CLEANING_CAP = 0.4
MIN_FIT_POINTS = 4


def thread_count(default: int | None = None) -> int:
    """Worker count from ``SIGNORINI_THREADS`` (falls back to the CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return value
    return default or os.cpu_count() or 1


def geometric_t_grid(t_min: float, t_max: float, steps: int, include_zero: bool = True,
                     negative: bool = False) -> tuple:
    """``steps`` log-spaced magnitudes in ``[t_min, t_max]``, optionally mirrored."""
    if not 0 < t_min <= t_max:
        raise ValueError("need 0 < t_min <= t_max")
    if steps < 1:
        raise ValueError("steps must be positive")
    mags = np.geomspace(t_min, t_max, steps) if steps > 1 else np.array([t_min])
    ts = list(mags)
    if negative:
        ts += list(-mags)
    if include_zero:
        ts.append(0.0)
    return tuple(sorted(float(t) for t in ts))


@dataclass(frozen=True)
class MonotonicityReport:
    nodewise: float     # most negative u(t') - u(t) over consecutive pairs
    boundary: float     # most negative (u(t') - u(t)) - (t' - t) on the lifted faces
    tol: float

    @property
    def ok(self) -> bool:
        return self.nodewise >= -self.tol and self.boundary >= -self.tol


@dataclass(frozen=True, eq=False)
class MonotoneFamily:
    g0: Callable
    psi: Callable
    t_grid: tuple
    solves: dict = field(repr=False)
    grid: Grid
    monotonicity: MonotonicityReport

    def __getitem__(self, t: float) -> SolveResult:
        return self.solves[self._key(t)]

    def _key(self, t: float) -> float:
        for s in self.t_grid:
            if math.isclose(s, t, rel_tol=1e-12, abs_tol=1e-15):
                return s
        raise KeyError(f"t={t} is not in the family grid")

    def difference(self, t: float, t0: float = 0.0) -> np.ndarray:
        """Nodal ``u(., t) - u(., t0)``."""
        return self[t].u.values - self[t0].u.values


def _lifted_faces(grid: Grid) -> np.ndarray:
    mask = grid.boundary_mask()
    y = grid.points()[..., -1]
    return mask & (np.abs(y) >= 0.5 - 1e-12)


def check_perturbation(psi, grid: Grid, atol: float = 1e-12) -> None:
    """Sample ``psi`` on the box boundary; require ``psi >= 0`` and ``psi >= 1`` up top."""
    mask = grid.boundary_mask()
    pts = grid.points()
    vals = np.asarray(psi(pts[mask]), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise PreconditionError("perturbation is not finite on the boundary")
    if np.min(vals) < -atol:
        i = int(np.argmin(vals))
        raise PreconditionError(
            f"perturbation is negative ({vals[i]:.3g}) at {pts[mask][i].tolist()}")
    lifted = np.asarray(psi(pts[_lifted_faces(grid)]), dtype=float)
    if lifted.size and np.min(lifted) < 1.0 - atol:
        raise PreconditionError(
            f"perturbation drops to {np.min(lifted):.3g} < 1 where |x_(n+1)| >= 1/2")


def _monotonicity(grid: Grid, ts: tuple, solves: dict, tol: float) -> MonotonicityReport:
    faces = _lifted_faces(grid)
    worst_node = math.inf
    worst_face = math.inf
    for a, b in zip(ts, ts[1:]):
        d = solves[b].u.values - solves[a].u.values
        worst_node = min(worst_node, float(np.min(d)))
        if faces.any():
            worst_face = min(worst_face, float(np.min(d[faces])) - (b - a))
    if worst_node is math.inf:
        worst_node = 0.0
    if worst_face is math.inf:
        worst_face = 0.0
    return MonotonicityReport(worst_node, worst_face, tol)


def build_family(g0, psi, t_grid, grid: Grid, omega: float = DEFAULT_OMEGA, tol: float = DEFAULT_TOL,
                 max_iters: int = DEFAULT_MAX_ITERS, workers: int | None = None,
                 check_tol: float = 1e-6) -> MonotoneFamily:
    """Solve ``g0 + t psi`` for every ``t`` in ``t_grid``.

    Solves run on a thread pool (the PSOR kernel releases the GIL).  Each
    solve is independent and deterministic, so the result does not depend
    on the worker count.  Monotonicity in ``t`` is verified afterwards;
    ``check_tol`` absorbs the solver's stopping error.
    """
    ts = tuple(sorted({float(t) for t in t_grid}))
    if not ts:
        raise ValueError("empty t grid")
    if any(abs(t) > 1.0 for t in ts):
        raise ValueError("family parameters must lie in [-1, 1]")
    check_perturbation(psi, grid)

    def run(t):
        try:
            return t, solve(SignoriniProblem(grid, shifted(g0, psi, t), omega, tol, max_iters))
        except NotConvergedError as exc:
            raise FamilyError(f"solve at t={t:g} did not converge: {exc}", t) from exc

    workers = workers or thread_count()
    if workers > 1 and len(ts) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(ts))) as pool:
            solves = dict(pool.map(run, ts))
    else:
        solves = dict(run(t) for t in ts)
    report = _monotonicity(grid, ts, solves, check_tol)
    if not report.ok:
        raise FamilyError(f"family is not monotone: nodewise {report.nodewise:.3g}, "
                          f"boundary {report.boundary:.3g}")
    return MonotoneFamily(g0, psi, ts, solves, grid, report)


def verify_hopf(family: MonotoneFamily, t: float, r: float = 0.5, x0=None) -> float | None:
    """``min h_t / (t x_(n+1))`` over nodes of ``B_r(x0)`` with ``x_(n+1) >= 2h``.

    ``h_t = u(., t) - u(., 0)``.  Returns ``None`` for ``t = 0``.
    """
    if t == 0:
        return None
    if t < 0:
        raise PreconditionError("Hopf estimate needs t > 0")
    if r > 0.5 + 1e-12:
        raise PreconditionError("ball must lie in B_1/2")
    grid = family.grid
    x0 = np.zeros(grid.dim) if x0 is None else np.asarray(x0, dtype=float)
    pts = grid.points()
    y = pts[..., -1]
    inside = (np.sum((pts - x0) ** 2, axis=-1) <= r * r) & (y >= 2.0 * grid.h - 1e-12)
    if not inside.any():
        raise InsufficientRangeError("no nodes with x_(n+1) >= 2h in the ball")
    ht = family.difference(t)
    return float(np.min(ht[inside] / (t * y[inside])))


@dataclass(frozen=True)
class PowerFit:
    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float


def _loglog_fit(x, y) -> PowerFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return PowerFit(x, y, float(slope), float(intercept))


def thin_growth(family: MonotoneFamily, t: float, x0=None, r_range=(0.05, 0.4),
                count: int = 8) -> PowerFit:
    """Slope of ``log min_{D_r} h_t`` against ``log r``.

    ``D_r`` is the part of the sphere ``dB_r(x0)`` with ``|x_(n+1)| > r/2``.
    ``r_range`` is either ``(lo, hi)``, sampled geometrically with ``count``
    radii, or an explicit list of radii.
    """
    grid = family.grid
    x0 = np.zeros(grid.dim) if x0 is None else np.asarray(x0, dtype=float)
    rr = np.asarray(r_range, dtype=float)
    radii = np.geomspace(rr[0], rr[1], count) if rr.size == 2 else np.sort(rr)
    radii = radii[radii >= 2.0 * grid.h]
    if radii.size < MIN_FIT_POINTS:
        raise InsufficientRangeError(f"need at least {MIN_FIT_POINTS} radii, got {radii.size}")
    from .geometry import ScalarField

    ht = ScalarField(grid, family.difference(t))
    mins = []
    for r in radii:
        pts, _ = sphere_rule(grid.n, x0, r, grid.h)
        pts = pts[np.abs(pts[:, -1]) > r / 2]
        m = float(np.min(interpolate(ht, pts, order=1)))
        if m <= 0:
            raise FamilyError(f"h_t is not positive on D_r at r={r:.4g} (min {m:.3g})", t)
        mins.append(m)
    return _loglog_fit(radii, np.array(mins))


@dataclass(frozen=True)
class TauInterval:
    index: tuple
    x: np.ndarray
    t_min: float
    t_max: float
    local_step: float

    @property
    def width(self) -> float:
        return self.t_max - self.t_min

    @property
    def flagged(self) -> bool:
        return self.width > 2.0 * self.local_step


def _local_step(ts: tuple, t: float) -> float:
    i = ts.index(t)
    gaps = [ts[j + 1] - ts[j] for j in (i - 1, i) if 0 <= j < len(ts) - 1]
    return max(gaps) if gaps else 0.0


def tau_map(family: MonotoneFamily) -> dict:
    """For each thin node, the ``t`` range over which it is a free boundary point.

    Nodes never on the free boundary are absent from the map.  An interval
    is flagged when it is wider than twice the local ``t`` spacing.
    """
    ts = family.t_grid
    seen: dict = {}
    for t in ts:
        for p in extract_free_boundary(family[t], clearance_gate=0.0):
            lo, hi, x = seen.get(p.index, (t, t, p.x))
            seen[p.index] = (min(lo, t), max(hi, t), x)
    out = {}
    for idx in sorted(seen):
        lo, hi, x = seen[idx]
        step = max(_local_step(ts, lo), _local_step(ts, hi))
        out[idx] = TauInterval(idx, x, lo, hi, step)
    return out


@dataclass(frozen=True)
class CleaningResult:
    side: str
    t: np.ndarray
    R: np.ndarray
    usable: np.ndarray
    slope: float
    intercept: float
    informative: bool
    monotone: bool
    h: float

    def rows(self) -> list[tuple]:
        return [(float(t), float(R), bool(u)) for t, R, u in zip(self.t, self.R, self.usable)]


def cleaning_radius(result: SolveResult, x0, side: str, cap: float = CLEANING_CAP) -> float:
    """Largest thin radius around ``x0`` free of contact (vacate) or fully in contact (fill)."""
    grid = result.grid
    x0 = np.asarray(x0, dtype=float)[: grid.n]
    thin = grid.thin_points()[..., : grid.n]
    dist = np.sqrt(np.sum((thin - x0) ** 2, axis=-1))
    mask = np.asarray(result.contact_mask, dtype=bool)
    if side == "vacate":
        bad = mask
    elif side == "fill":
        bad = ~mask
    else:
        raise ValueError(f"side must be 'vacate' or 'fill', got {side!r}")
    d = dist[bad & (dist <= cap)]
    return float(np.min(d)) if d.size else cap


def cleaning_exponent(family: MonotoneFamily, x0=None, side: str = "vacate",
                      cap: float = CLEANING_CAP) -> CleaningResult:
    """Fit ``log R(t)`` against ``log |t|`` on one side of ``t = 0``.

    Only values with ``4h <= R < cap`` enter the fit.  When every ``R`` sits
    at the cap the result is returned with ``informative=False`` and a NaN
    slope; fewer than four usable values otherwise raise
    :class:`InsufficientRangeError`.
    """
    grid = family.grid
    x0 = np.zeros(grid.dim) if x0 is None else np.asarray(x0, dtype=float)
    if side == "vacate":
        ts = np.array([t for t in family.t_grid if t > 0])
    elif side == "fill":
        ts = np.array([t for t in family.t_grid if t < 0])
    else:
        raise ValueError(f"side must be 'vacate' or 'fill', got {side!r}")
    R = np.array([cleaning_radius(family[t], x0, side, cap) for t in ts])
    # vacate: R nondecreasing in t; fill: R nonincreasing in t
    steps = np.diff(R) if side == "vacate" else -np.diff(R)
    monotone = bool(np.all(steps >= -grid.h * (1.0 + 1e-9)))
    usable = (R >= 4.0 * grid.h - 1e-12) & (R < cap - 1e-12)
    if ts.size and np.all(R >= cap - 1e-12):
        return CleaningResult(side, ts, R, usable, math.nan, math.nan, False, monotone, grid.h)
    if int(usable.sum()) < MIN_FIT_POINTS:
        raise InsufficientRangeError(
            f"only {int(usable.sum())} usable t values on the {side} side (need {MIN_FIT_POINTS})")
    fit = _loglog_fit(np.abs(ts[usable]), R[usable])
    return CleaningResult(side, ts, R, usable, fit.slope, fit.intercept, True, monotone, grid.h)
