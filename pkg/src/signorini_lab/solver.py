"""Projected SOR for the discrete Signorini problem on the half box.

Unknowns live on the upper half grid.  Interior nodes use the standard
``2(n+1)+1``-point Laplacian; thin nodes use the even-reflection stencil
(vertical neighbour counted twice) followed by the projection
``u <- max(u, 0)``.  Dirichlet data are imposed on the lateral and top
faces.  Sweeps run in fixed lexicographic (C) order, so identical problems
give bit-identical results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .errors import NotConvergedError, PreconditionError
from .geometry import Grid, ScalarField

log = logging.getLogger(__name__)

DEFAULT_OMEGA = 1.9
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 200_000


@numba.njit(cache=True, nogil=True)
def _sweep2d(u, omega):
    N, M = u.shape
    big = 0.0
    for i in range(1, N - 1):
        # thin node: vertical neighbour counted twice, then project
        old = u[i, 0]
        gs = (u[i - 1, 0] + u[i + 1, 0] + 2.0 * u[i, 1]) * 0.25
        new = old + omega * (gs - old)
        if new < 0.0:
            new = 0.0
        u[i, 0] = new
        d = abs(new - old)
        if d > big:
            big = d
        for k in range(1, M - 1):
            old = u[i, k]
            gs = (u[i - 1, k] + u[i + 1, k] + u[i, k - 1] + u[i, k + 1]) * 0.25
            new = old + omega * (gs - old)
            u[i, k] = new
            d = abs(new - old)
            if d > big:
                big = d
    return big


@numba.njit(cache=True, nogil=True)
def _sweep3d(u, omega):
    N, _, M = u.shape
    big = 0.0
    sixth = 1.0 / 6.0
    for i in range(1, N - 1):
        for j in range(1, N - 1):
            old = u[i, j, 0]
            gs = (u[i - 1, j, 0] + u[i + 1, j, 0] + u[i, j - 1, 0] + u[i, j + 1, 0]
                  + 2.0 * u[i, j, 1]) * sixth
            new = old + omega * (gs - old)
            if new < 0.0:
                new = 0.0
            u[i, j, 0] = new
            d = abs(new - old)
            if d > big:
                big = d
            for k in range(1, M - 1):
                old = u[i, j, k]
                gs = (u[i - 1, j, k] + u[i + 1, j, k] + u[i, j - 1, k] + u[i, j + 1, k]
                      + u[i, j, k - 1] + u[i, j, k + 1]) * sixth
                new = old + omega * (gs - old)
                u[i, j, k] = new
                d = abs(new - old)
                if d > big:
                    big = d
    return big


@numba.njit(cache=True, nogil=True)
def _run2d(u, omega, stop, max_iters):
    it = 0
    big = np.inf
    while it < max_iters:
        big = _sweep2d(u, omega)
        it += 1
        if big < stop:
            break
    return it, big


@numba.njit(cache=True, nogil=True)
def _run3d(u, omega, stop, max_iters):
    it = 0
    big = np.inf
    while it < max_iters:
        big = _sweep3d(u, omega)
        it += 1
        if big < stop:
            break
    return it, big


def discrete_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    """Symmetric discrete Laplacian at every non-boundary node.

    Thin nodes use the ghost value ``u(x', -h) = u(x', h)``.  Boundary
    entries (lateral and top faces) are set to zero.
    """
    u = np.asarray(values, dtype=float)
    dim = u.ndim
    lap = np.zeros_like(u)
    inner = tuple([slice(1, -1)] * (dim - 1) + [slice(0, -1)])
    center = u[inner]
    acc = -2.0 * dim * center
    for ax in range(dim - 1):
        for shift in (-1, 1):
            sl = list(inner)
            sl[ax] = slice(1 + shift, u.shape[ax] - 1 + shift)
            acc = acc + u[tuple(sl)]
    up = u[tuple([slice(1, -1)] * (dim - 1) + [slice(1, None)])]
    down = np.concatenate([up[..., :1], center[..., :-1]], axis=-1)
    acc = acc + up + down
    lap[inner] = acc / (h * h)
    return lap


def dirichlet_energy(values: np.ndarray, h: float) -> float:
    """Discrete Dirichlet energy consistent with the PSOR stencil.

    Edges inside the thin plane carry weight 1/2 (they are shared with the
    reflected half); all other edges weight 1.  The node-wise minimizer of
    this energy is exactly the Gauss-Seidel update.
    """
    u = np.asarray(values, dtype=float)
    dim = u.ndim
    total = 0.0
    for ax in range(dim):
        d = np.diff(u, axis=ax)
        sq = d * d
        if ax < dim - 1:
            total += 0.5 * float(np.sum(sq[..., 0])) + float(np.sum(sq[..., 1:]))
        else:
            total += float(np.sum(sq))
    return 0.5 * total * h ** (dim - 2)


@dataclass
class SignoriniProblem:
    """Dirichlet data ``g`` on the lateral and top faces of the half box."""

    grid: Grid
    g: Callable
    omega: float = DEFAULT_OMEGA
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if not 1.0 < self.omega < 2.0:
            raise ValueError(f"omega must lie in (1, 2), got {self.omega}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @property
    def contact_threshold(self) -> float:
        return max(10.0 * self.tol, self.grid.h ** 3)

    def boundary_values(self) -> np.ndarray:
        """Datum sampled on the whole grid (only boundary entries matter)."""
        grid = self.grid
        mask = grid.boundary_mask()
        pts = grid.points()[mask]
        vals = np.asarray(self.g(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("boundary datum is not finite on the box boundary")
        out = np.zeros(grid.shape)
        out[mask] = vals
        return out

    def initial_guess(self) -> np.ndarray:
        """Multilinear (transfinite) interpolation of the lateral data.

        Thin values are clamped to be nonnegative.
        """
        grid = self.grid
        b = self.boundary_values()
        s = (grid.thin_coords() + 1.0) / 2.0
        if grid.n == 1:
            u = np.outer(1.0 - s, b[0, :]) + np.outer(s, b[-1, :])
        else:
            sx = s[:, None, None]
            sy = s[None, :, None]
            lx = (1.0 - sx) * b[0][None, :, :] + sx * b[-1][None, :, :]
            ly = (1.0 - sy) * b[:, 0][:, None, :] + sy * b[:, -1][:, None, :]
            corners = ((1 - sx) * (1 - sy) * b[0, 0] + sx * (1 - sy) * b[-1, 0]
                       + (1 - sx) * sy * b[0, -1] + sx * sy * b[-1, -1])
            u = lx + ly - corners
        mask = grid.boundary_mask()
        u[mask] = b[mask]
        interior_thin = ~mask[..., 0]
        u[..., 0][interior_thin] = np.maximum(u[..., 0][interior_thin], 0.0)
        return np.ascontiguousarray(u)


@dataclass(frozen=True)
class Residuals:
    pde: float
    complementarity: float
    negativity: float


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: ScalarField
    iterations: int
    residuals: Residuals
    contact_mask: np.ndarray
    tol: float
    omega: float
    last_update: float
    converged: bool
    energies: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def contact_threshold(self) -> float:
        return max(10.0 * self.tol, self.grid.h ** 3)

    def residuals_ok(self) -> bool:
        h = self.grid.h
        r = self.residuals
        return (r.pde <= self.tol / (h * h) and r.complementarity <= self.tol
                and r.negativity <= self.tol)


def compute_residuals(values: np.ndarray, h: float) -> Residuals:
    lap = discrete_laplacian(values, h)
    dim = values.ndim
    inner_bulk = tuple([slice(1, -1)] * (dim - 1) + [slice(1, -1)])
    pde = float(np.max(np.abs(lap[inner_bulk]))) if lap[inner_bulk].size else 0.0
    inner_thin = tuple([slice(1, -1)] * (dim - 1) + [0])
    u0 = values[inner_thin]
    flux = -0.5 * h * lap[inner_thin]
    compl = float(np.max(np.abs(np.minimum(u0, flux))))
    neg = float(max(0.0, -np.min(values[..., 0])))
    return Residuals(pde=pde, complementarity=compl, negativity=neg)


def _finish(problem: SignoriniProblem, u: np.ndarray, iters: int, last: float,
            energies: list) -> SolveResult:
    grid = problem.grid
    res = compute_residuals(u, grid.h)
    field_ = ScalarField(grid, u)
    mask = field_.thin_values <= problem.contact_threshold
    mask.setflags(write=False)
    return SolveResult(u=field_, iterations=int(iters), residuals=res, contact_mask=mask,
                       tol=problem.tol, omega=problem.omega, last_update=float(last),
                       converged=bool(last < problem.tol * grid.h ** 2), energies=energies)


def solve(problem: SignoriniProblem, record_energy: bool = False) -> SolveResult:
    """Run PSOR sweeps until the max nodal update drops below ``tol*h^2``.

    Raises :class:`NotConvergedError` (carrying the partial result) when
    ``max_iters`` is reached and the residual checks fail.
    """
    grid = problem.grid
    u = problem.initial_guess()
    stop = problem.tol * grid.h ** 2
    sweep = _sweep2d if grid.n == 1 else _sweep3d
    run = _run2d if grid.n == 1 else _run3d
    energies: list[float] = []
    if record_energy:
        energies.append(dirichlet_energy(u, grid.h))
        iters, last = 0, np.inf
        while iters < problem.max_iters:
            last = sweep(u, problem.omega)
            iters += 1
            energies.append(dirichlet_energy(u, grid.h))
            if last < stop:
                break
    else:
        iters, last = run(u, problem.omega, stop, problem.max_iters)
    result = _finish(problem, u, iters, last, energies)
    log.debug("PSOR n=%d N=%d: %d sweeps, last update %.3e", grid.n, grid.N, iters, last)
    if not result.converged and not result.residuals_ok():
        raise NotConvergedError(
            f"PSOR did not converge in {iters} sweeps (last update {last:.3e}, "
            f"residuals {result.residuals})", result)
    return result


def _as_field(obj) -> ScalarField:
    return obj.u if isinstance(obj, SolveResult) else obj


def verify_superharmonicity(result) -> float:
    """Largest discrete Laplacian over interior thin nodes.

    Solutions are superharmonic across the thin space, so this should not
    exceed ``tol/h^2``; a positive value of order ``1/h`` flags a kink of
    the wrong sign.
    """
    u = _as_field(result)
    lap = discrete_laplacian(u.values, u.grid.h)
    thin = lap[tuple([slice(1, -1)] * u.grid.n + [0])]
    return float(np.max(thin))


@dataclass(frozen=True)
class ComparisonReport:
    max_difference: float
    v_frequency: float | None
    hypotheses_hold: bool
    coincide: bool


def compare_ordered(u, v, x0, tol: float = DEFAULT_TOL, r_max: float | None = None) -> ComparisonReport:
    """Strong-comparison diagnostic for ordered solutions ``u >= v``.

    Both must vanish at the thin point ``x0``.  When ``v`` has frequency
    above 1 at ``x0`` the two solutions are expected to coincide, i.e.
    ``max|u - v| <= 10 tol``.
    """
    fu, fv = _as_field(u), _as_field(v)
    if fu.grid != fv.grid:
        raise PreconditionError("fields live on different grids")
    diff = fu.values - fv.values
    if np.min(diff) < -tol:
        raise PreconditionError(f"inputs not ordered: min(u - v) = {np.min(diff):.3e}")
    x0 = np.asarray(x0, dtype=float)
    idx = fu.grid.node_index(x0)
    if abs(fu.values[idx]) > tol or abs(fv.values[idx]) > tol:
        raise PreconditionError("u and v must both vanish at x0")
    max_diff = float(np.max(np.abs(diff)))
    freq = None
    if not np.any(fv.values):
        hyp = True
    else:
        from .frequency import frequency_profile

        if r_max is None:
            r_max = min(0.5, fu.grid.clearance(x0) - fu.grid.h)
        prof = frequency_profile(fv, x0, r_max)
        freq = prof.kappa_hat
        hyp = bool(prof.reliable and freq is not None and freq > 1.0)
    return ComparisonReport(max_difference=max_diff, v_frequency=freq, hypotheses_hold=hyp,
                            coincide=max_diff <= 10.0 * tol)
