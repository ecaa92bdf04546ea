"""Free boundary extraction, frequency-based stratification, box counting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .blowup import cubic_fit, first_blowup_quadratic, point_frequency, second_blowup
from .catalog import nearest_in_S
from .config import DEFAULT, AnalysisConfig
from .errors import InsufficientRangeError, NotQuadraticPointError, PreconditionError

REG = "Reg"
G2_ORD = "Gamma2_ordinary"
G2_ANOM = "Gamma2_anomalous"
G3 = "Gamma3"
G_HIGH = "Gamma_ge_7/2"
G_STAR = "Gamma_star"
UNRESOLVED = "unresolved"
STRATA = (REG, G2_ORD, G2_ANOM, G3, G_HIGH, G_STAR, UNRESOLVED)


@dataclass(frozen=True, eq=False)
class FreeBoundaryPoint:
    index: tuple
    x: np.ndarray
    clearance: float
    low_confidence: bool
    kappa_hat: float | None = None
    stratum: str | None = None
    payload: object = None
    note: str = ""
    profile: object = field(default=None, repr=False)

    def payload_dict(self) -> dict | None:
        p = self.payload
        if p is None:
            return None
        if hasattr(p, "to_dict"):
            return p.to_dict()
        if isinstance(p, dict):
            return {k: (v.to_dict() if hasattr(v, "to_dict") else v) for k, v in p.items()}
        return {"value": repr(p)}


def _neighbors(idx: tuple, shape: tuple):
    for ax in range(len(idx)):
        for d in (-1, 1):
            j = list(idx)
            j[ax] += d
            if 0 <= j[ax] < shape[ax]:
                yield tuple(j)


def extract_free_boundary(result, clearance_gate: float = DEFAULT.bands.clearance) -> list[FreeBoundaryPoint]:
    """Contact nodes adjacent (along a thin axis) to a non-contact node.

    Only interior thin nodes qualify.  Output is ordered by node index.
    """
    mask = np.asarray(result.contact_mask, dtype=bool)
    grid = result.u.grid
    inner = tuple(slice(1, -1) for _ in range(grid.n))
    if not mask[inner].any() or mask[inner].all():
        return []
    pts = []
    for idx in zip(*np.nonzero(mask)):
        idx = tuple(int(i) for i in idx)
        if any(i == 0 or i == grid.N - 1 for i in idx):
            continue
        if any(not mask[j] for j in _neighbors(idx, mask.shape)):
            x = grid.node_coord(idx + (0,))
            c = grid.clearance(x)
            pts.append(FreeBoundaryPoint(idx, x, c, c < clearance_gate))
    return pts


def _dist_to_S(k: float) -> float:
    return abs(k - nearest_in_S(k))


def _classify_one(u, pt: FreeBoundaryPoint, config: AnalysisConfig, contact_threshold) -> FreeBoundaryPoint:
    b = config.bands
    if pt.low_confidence:
        return replace(pt, stratum=UNRESOLVED, note="clearance below gate")
    prof = point_frequency(u, pt.x, config)
    k = prof.kappa_hat
    if not prof.reliable or k is None:
        return replace(pt, kappa_hat=k, stratum=UNRESOLVED, note="unreliable frequency profile", profile=prof)
    base = replace(pt, kappa_hat=float(k), profile=prof)
    if b.regular[0] <= k <= b.regular[1]:
        return replace(base, stratum=REG)
    if b.quadratic[0] <= k <= b.quadratic[1]:
        try:
            fb = first_blowup_quadratic(u, pt.x, kappa_hat=k, config=config)
        except NotQuadraticPointError as exc:
            return replace(base, stratum=UNRESOLVED, note=str(exc))
        if fb.degenerate:
            return replace(base, stratum=UNRESOLVED, payload={"first_blowup": fb.profile},
                           note="vanishing first blow-up")
        sb = second_blowup(u, pt.x, fb.profile, contact_threshold, config)
        payload = {"first_blowup": fb.profile, "second_blowup": sb}
        stratum = {"ordinary": G2_ORD, "anomalous": G2_ANOM}.get(sb.label, UNRESOLVED)
        return replace(base, stratum=stratum, payload=payload)
    if b.cubic[0] <= k <= b.cubic[1]:
        try:
            cf = cubic_fit(u, pt.x, kappa_hat=k, config=config)
            payload = {"cubic": cf.profile, "alpha_hat": cf.alpha_hat, "flagged": cf.flagged}
        except (PreconditionError, np.linalg.LinAlgError) as exc:
            payload = {"error": str(exc)}
        return replace(base, stratum=G3, payload=payload)
    if k >= b.high_min and _dist_to_S(k) <= b.high_tol:
        return replace(base, stratum=G_HIGH)
    if k > b.star_min and _dist_to_S(k) > b.star_gap:
        return replace(base, stratum=G_STAR, note="candidate")
    return replace(base, stratum=UNRESOLVED, note="frequency between bands")


def classify(u, points, config: AnalysisConfig = DEFAULT, contact_threshold: float | None = None,
             workers: int = 1) -> list[FreeBoundaryPoint]:
    """Attach ``kappa_hat`` and a stratum label to each point.

    Results keep the input order.  ``workers > 1`` evaluates points on a
    thread pool; each point's result does not depend on scheduling.
    """
    field_ = getattr(u, "u", u)
    if contact_threshold is None and hasattr(u, "contact_threshold"):
        contact_threshold = u.contact_threshold
    if workers > 1 and len(points) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda p: _classify_one(field_, p, config, contact_threshold), points))
    return [_classify_one(field_, p, config, contact_threshold) for p in points]


@dataclass(frozen=True)
class BoxCount:
    dimension: float
    scales: tuple
    counts: tuple
    r_squared: float
    flagged: bool
    reason: str = ""


def box_counting_dimension(points, scales) -> BoxCount:
    """Slope of ``log(occupied boxes)`` against ``log(1/scale)``.

    Fewer than 10 points or 4 scales are accepted but flagged; a fit is
    also flagged when every scale sees the same count or every point sits
    in its own box (the range of scales does not resolve the set).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scales = np.asarray(sorted(scales, reverse=True), dtype=float)
    if len(scales) < 2:
        raise InsufficientRangeError("need at least two scales")
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    counts = np.array([len({tuple(r) for r in np.floor(pts / s).astype(np.int64)}) for s in scales])
    x = np.log(1.0 / scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    reasons = []
    if len(pts) < 10:
        reasons.append("fewer than 10 points")
    if len(scales) < 4:
        reasons.append("fewer than 4 scales")
    distinct = len({tuple(r) for r in pts})
    if np.all(counts == counts[0]) and distinct > 1:
        reasons.append("counts constant across scales")
    if np.all(counts == distinct) and distinct > 1:
        reasons.append("every point in its own box")
    slope = 0.0 if abs(slope) < 1e-12 else float(slope)
    return BoxCount(slope, tuple(float(s) for s in scales), tuple(int(c) for c in counts), r2,
                    bool(reasons), "; ".join(reasons))


def free_boundary_coordinates(points: list[FreeBoundaryPoint]) -> np.ndarray:
    """Thin-space coordinates of free boundary points, shape ``(m, n)``."""
    if not points:
        return np.zeros((0, 0))
    n = len(points[0].x) - 1
    return np.array([p.x[:n] for p in points])


def is_near_S(k: float | None, tol: float = 0.15) -> bool:
    return k is not None and math.isfinite(k) and _dist_to_S(k) <= tol
