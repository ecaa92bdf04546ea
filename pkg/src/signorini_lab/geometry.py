"""Grids on the half box, fields sampled on them, and ball/sphere quadrature.

The computational box is ``Q = [-1, 1]^n x [0, 1]``.  Fields are stored on
the upper half only and are understood to be even in the last coordinate,
so every evaluation at ``x_{n+1} < 0`` is answered by reflection.  The thin
space ``{x_{n+1} = 0}`` is the bottom grid plane.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import OutOfDomainError, ResolutionError

_BOX_EPS = 1e-12
MIN_RADIUS_CELLS = 4
# interpolation order used when sampling integrands for quadrature
QUAD_ORDER = 3
_PAD = 8


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``N`` nodes per thin axis and spacing ``h = 2/(N-1)``.

    The vertical axis covers ``[0, 1]`` with ``(N-1)/2`` intervals so the same
    spacing applies in every direction.
    """

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"thin dimension n must be 1 or 2, got {self.n}")
        if self.N < 33 or self.N % 2 == 0:
            raise ValueError(f"N must be odd and >= 33, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 / (self.N - 1)

    @property
    def M(self) -> int:
        """Number of vertical nodes (including the thin plane)."""
        return (self.N - 1) // 2 + 1

    @property
    def dim(self) -> int:
        return self.n + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n + (self.M,)

    def thin_coords(self) -> np.ndarray:
        return -1.0 + self.h * np.arange(self.N)

    def vertical_coords(self) -> np.ndarray:
        return self.h * np.arange(self.M)

    def axes(self) -> list[np.ndarray]:
        return [self.thin_coords()] * self.n + [self.vertical_coords()]

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """All node coordinates as an array of shape ``shape + (n+1,)``."""
        return np.stack(self.mesh(), axis=-1)

    def thin_points(self) -> np.ndarray:
        """Thin-plane node coordinates, shape ``(N,)*n + (n+1,)``."""
        return self.points()[..., 0, :]

    def node_index(self, x) -> tuple[int, ...]:
        """Index of the node nearest to the thin or bulk point ``x``."""
        x = np.asarray(x, dtype=float)
        idx = [int(round((xi + 1.0) / self.h)) for xi in x[: self.n]]
        idx.append(int(round(abs(x[self.n]) / self.h)))
        for k, i in enumerate(idx):
            top = self.N - 1 if k < self.n else self.M - 1
            if not 0 <= i <= top:
                raise OutOfDomainError(f"point {x.tolist()} is outside the box")
        return tuple(idx)

    def node_coord(self, idx) -> np.ndarray:
        x = [-1.0 + self.h * i for i in idx[: self.n]]
        x.append(self.h * idx[self.n] if len(idx) > self.n else 0.0)
        return np.array(x)

    def boundary_mask(self) -> np.ndarray:
        """True on the Dirichlet boundary: lateral faces and the top face."""
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.n):
            sl = [slice(None)] * self.dim
            sl[ax] = 0
            mask[tuple(sl)] = True
            sl[ax] = -1
            mask[tuple(sl)] = True
        mask[..., -1] = True
        return mask

    def clearance(self, x) -> float:
        """Distance from a thin point to the lateral boundary of the box."""
        x = np.asarray(x, dtype=float)
        return float(np.min(1.0 - np.abs(x[: self.n])))

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "h": self.h, "symmetry": "even"}


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values on the upper half of the box, even in ``x_{n+1}``."""

    grid: Grid
    values: np.ndarray
    symmetry: str = "even"
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if self.symmetry != "even":
            raise ValueError("only even symmetry is supported")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Sample ``fn(points)`` (points of shape ``(..., n+1)``) at every node."""
        return cls(grid, np.asarray(fn(grid.points()), dtype=float))

    @property
    def thin_values(self) -> np.ndarray:
        return self.values[..., 0]

    def __call__(self, x) -> np.ndarray:
        return interpolate(self, x)

    def cell_grad_sq(self) -> np.ndarray:
        """|grad u|^2 at every cell center, from centered differences.

        For a multilinear cell the gradient at its center is the average of
        the edge differences parallel to each axis.
        """
        if "grad_sq" not in self._cache:
            u = self.values
            h = self.grid.h
            dim = self.grid.dim
            total = np.zeros(tuple(s - 1 for s in u.shape))
            for ax in range(dim):
                diff = np.diff(u, axis=ax) / h
                for other in range(dim):
                    if other != ax:
                        diff = 0.5 * (diff[(slice(None),) * other + (slice(1, None),)]
                                      + diff[(slice(None),) * other + (slice(None, -1),)])
                total += diff * diff
            self._cache["grad_sq"] = total
        return self._cache["grad_sq"]


def _check_box(grid: Grid, pts: np.ndarray) -> None:
    thin = pts[..., : grid.n]
    vert = np.abs(pts[..., grid.n])
    if np.any(np.abs(thin) > 1.0 + _BOX_EPS) or np.any(vert > 1.0 + _BOX_EPS):
        raise OutOfDomainError("interpolation point outside the box")


def interpolate(field: ScalarField, x, order: int = 1) -> np.ndarray | float:
    """Interpolate ``field`` at points ``x`` of shape ``(..., n+1)``.

    ``order=1`` is multilinear (exact on multilinear functions); ``order=3``
    uses a cubic B-spline of the evenly reflected data.  Points below the
    thin space are reflected.
    """
    grid = field.grid
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != grid.dim:
        raise ValueError(f"points must have {grid.dim} coordinates")
    _check_box(grid, pts)
    flat = pts.reshape(-1, grid.dim)
    if order == 1:
        out = _multilinear(field, flat)
    elif order == 3:
        out = _spline_eval(field, "values", flat)
    else:
        raise ValueError("order must be 1 or 3")
    out = out.reshape(pts.shape[:-1])
    return float(out[0]) if scalar else out


def _multilinear(field: ScalarField, flat: np.ndarray) -> np.ndarray:
    grid = field.grid
    h = grid.h
    s = np.empty_like(flat)
    s[:, : grid.n] = (np.clip(flat[:, : grid.n], -1.0, 1.0) + 1.0) / h
    s[:, grid.n] = np.minimum(np.abs(flat[:, grid.n]), 1.0) / h
    upper = np.array([grid.N - 2] * grid.n + [grid.M - 2])
    i0 = np.minimum(np.floor(s).astype(np.int64), upper)
    t = s - i0
    vals = field.values
    out = np.zeros(flat.shape[0])
    for corner in range(2 ** grid.dim):
        w = np.ones(flat.shape[0])
        idx = []
        for ax in range(grid.dim):
            bit = (corner >> ax) & 1
            w *= t[:, ax] if bit else 1.0 - t[:, ax]
            idx.append(i0[:, ax] + bit)
        out += w * vals[tuple(idx)]
    return out


def _spline_coeffs(field: ScalarField, kind: str) -> np.ndarray:
    """Cubic B-spline coefficients of node values or of cell |grad u|^2.

    The data are mirrored across the thin plane (evenness) and padded by
    odd reflection at the outer faces, which keeps the spline accurate up
    to the box boundary.
    """
    key = "spline_" + kind
    if key not in field._cache:
        if kind == "values":
            a = field.values
            full = np.concatenate([a[..., :0:-1], a], axis=-1)
        else:
            a = field.cell_grad_sq()
            full = np.concatenate([a[..., ::-1], a], axis=-1)
        full = np.pad(full, _PAD, mode="reflect", reflect_type="odd")
        field._cache[key] = ndimage.spline_filter(full, order=3, mode="mirror")
    return field._cache[key]


def _spline_eval(field: ScalarField, kind: str, flat: np.ndarray) -> np.ndarray:
    grid = field.grid
    shift = 0.0 if kind == "values" else 0.5
    idx = (flat.T + 1.0) / grid.h - shift + _PAD
    return ndimage.map_coordinates(_spline_coeffs(field, kind), idx, order=3,
                                   mode="mirror", prefilter=False)


def _check_ball(grid: Grid, center: np.ndarray, r: float) -> None:
    if r < MIN_RADIUS_CELLS * grid.h * (1.0 - 1e-9):
        raise ResolutionError(f"radius {r:.4g} below {MIN_RADIUS_CELLS}h = {MIN_RADIUS_CELLS * grid.h:.4g}")
    thin = center[: grid.n]
    if np.any(np.abs(thin) + r > 1.0 + _BOX_EPS) or abs(center[grid.n]) + r > 1.0 + _BOX_EPS:
        raise OutOfDomainError(f"ball B_{r:.4g}({center.tolist()}) leaves the box")


def sphere_rule(n: int, center, r: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights on the sphere ``dB_r(center)``.

    Circle (n = 1): trapezoid rule with ``M = max(64, ceil(4 pi r / h))``
    points, rounded up to a multiple of 8 so the rule is invariant under the
    symmetries of the square lattice.  Sphere (n = 2): Gauss-Legendre in the
    polar cosine times a trapezoid rule in longitude.
    """
    center = np.asarray(center, dtype=float)
    if n == 1:
        m = max(64, math.ceil(4.0 * math.pi * r / h))
        m = 8 * math.ceil(m / 8)
        theta = 2.0 * math.pi * np.arange(m) / m
        pts = center + r * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        wts = np.full(m, 2.0 * math.pi * r / m)
        return pts, wts
    n_lat = max(32, math.ceil(2.0 * math.pi * r / h))
    n_lon = 8 * math.ceil(2 * n_lat / 8)
    z, wz = np.polynomial.legendre.leggauss(n_lat)
    lon = 2.0 * math.pi * np.arange(n_lon) / n_lon
    rho = np.sqrt(1.0 - z * z)
    zz, ll = np.meshgrid(z, lon, indexing="ij")
    rr = np.meshgrid(rho, lon, indexing="ij")[0]
    unit = np.stack([rr * np.cos(ll), rr * np.sin(ll), zz], axis=-1).reshape(-1, 3)
    wts = (np.outer(wz, np.full(n_lon, 2.0 * math.pi / n_lon)) * r * r).reshape(-1)
    return center + r * unit, wts


def sphere_samples(field: ScalarField, center, r: float, order: int = QUAD_ORDER):
    """Field values at the sphere rule nodes, plus weights and nodes."""
    grid = field.grid
    center = np.asarray(center, dtype=float)
    _check_ball(grid, center, r)
    pts, wts = sphere_rule(grid.n, center, r, grid.h)
    return interpolate(field, pts, order=order), wts, pts


def sphere_quadrature(field: ScalarField, center, r: float, order: int = QUAD_ORDER) -> float:
    """Raw surface integral of ``field`` over ``dB_r(center)``."""
    vals, wts, _ = sphere_samples(field, center, r, order)
    return float(np.dot(wts, vals))


def _shell_grad_sq(field: ScalarField, center: np.ndarray, s: float) -> float:
    grid = field.grid
    if s <= 0.0:
        return 0.0
    pts, wts = sphere_rule(grid.n, center, s, grid.h)
    pts[:, grid.n] = np.abs(pts[:, grid.n])
    return float(np.dot(wts, _spline_eval(field, "grad_sq", pts)))


def ball_grad_sq_profile(field: ScalarField, center, radii) -> np.ndarray:
    """Raw integrals of ``|grad field|^2`` over ``B_r(center)`` for increasing radii.

    The ball integral is written in polar form: Gauss-Legendre in the radius
    on each gap between consecutive radii, the sphere rule on every shell.
    The integrand is the cell-centered difference gradient, spline
    interpolated.  No cell clipping is involved, so the result varies
    smoothly with ``r``.
    """
    grid = field.grid
    center = np.asarray(center, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    for r in (radii[0], radii[-1]):
        _check_ball(grid, center, float(r))
    out = np.empty(len(radii))
    total = 0.0
    lo = 0.0
    for j, hi in enumerate(radii):
        m = max(8, math.ceil((hi - lo) / grid.h) + 2)
        z, w = np.polynomial.legendre.leggauss(m)
        s = lo + (z + 1.0) * (hi - lo) / 2.0
        w = w * (hi - lo) / 2.0
        total += sum(wi * _shell_grad_sq(field, center, si) for si, wi in zip(s, w))
        out[j] = total
        lo = hi
    return out


def ball_quadrature_grad_sq(field: ScalarField, center, r: float) -> float:
    """Raw volume integral of ``|grad field|^2`` over ``B_r(center)``."""
    return float(ball_grad_sq_profile(field, center, [r])[0])


# --- serialization --------------------------------------------------------

_MAGIC = b"SIGFIELD1\n"


def save_field(path, field: ScalarField) -> None:
    """Write a field: magic line, one-line JSON header, raw little-endian f8."""
    header = field.grid.to_dict() | {"dtype": "<f8", "shape": list(field.grid.shape)}
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path) -> ScalarField:
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path}: not a field file")
    rest = data[len(_MAGIC):]
    nl = rest.index(b"\n")
    header = json.loads(rest[:nl])
    grid = Grid(int(header["n"]), int(header["N"]))
    if header.get("symmetry", "even") != "even":
        raise ValueError("unsupported symmetry")
    vals = np.frombuffer(rest[nl + 1:], dtype="<f8").reshape(grid.shape)
    return ScalarField(grid, vals.astype(np.float64))
