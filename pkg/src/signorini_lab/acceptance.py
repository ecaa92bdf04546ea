"""The acceptance list: ten numbered criteria, each a set of named checks.

Every criterion returns a :class:`CriterionResult` whose ``rows`` are the
numeric evidence (written to CSV by the CLI, so they must be deterministic)
and whose ``checks`` hold the individual pass/fail decisions.  Wall time is
kept out of the rows.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blowup import orthogonality_check, point_frequency, second_blowup
from .catalog import CubicProfile, HalfPlaneSolution, QuadraticProfile, canonical_catalog, validate_solution
from .data import Bump, Combination, Lift, RandomDatum
from .errors import InsufficientRangeError, SignoriniError
from .families import build_family, cleaning_exponent, cleaning_radius, geometric_t_grid, thread_count, verify_hopf
from .frequency import frequency_profile, growth_check, growth_check_w, w_frequency_profile
from .geometry import Grid, ScalarField
from .polynomials import HarmonicPolynomial
from .solver import SignoriniProblem, solve
from .strata import classify, extract_free_boundary, is_near_S

# Pinned tolerances; tests/test_acceptance.py asserts these values.
TOLERANCES = {
    "catalog_violation": 1e-6,
    "catalog_step": 1e-4,
    "catalog_seconds": 10.0,
    "quadratic_error_tols": 10.0,        # multiples of the solver tol
    "halfplane_ratio_min": 1.7,
    "contact_cells": 1.0,
    "solver_seconds": 60.0,
    "phi_error": 0.03,
    "phi_r_min_cells": 6.0,
    "phi_r_max": 0.5,
    "regular_band": (1.4, 1.6),
    "high_band": (3.4, 3.6),
    "frequency_seconds": 60.0,
    "growth_delta": 0.1,
    "rigidity_distance": 0.15,
    "rigidity_fraction": 0.95,
    "parity_residual": 1e-10,
    "orthogonality_rel": 0.05,
    "hopf_spread": 2.0,
    "quadratic_slope_max": 0.45,
    "cubic_slope_max": 0.5,
    "cleaning_seconds": 900.0,
}

RANDOM_SEEDS = tuple(range(10))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float | None = None
    bound: str = ""


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)     # (kind, key, value, extra)
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name: str, passed: bool, value=None, bound: str = "") -> Check:
        c = Check(name, bool(passed), None if value is None else float(value), bound)
        self.checks.append(c)
        return c

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        tail = "" if not failed else " (failed: " + ", ".join(failed) + ")"
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title}{tail}"


@dataclass(frozen=True)
class Sizes:
    n1: int            # 2D fields
    n1_coarse: int     # coarse grid for the convergence ratio
    n2: int            # 3D fields
    family: int        # family experiments

    @classmethod
    def for_mode(cls, quick: bool) -> "Sizes":
        return cls(65, 33, 33, 65) if quick else cls(129, 65, 65, 257)


def _field(profile, grid: Grid) -> ScalarField:
    return ScalarField.from_function(grid, profile)


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --- 1 -----------------------------------------------------------------------

def criterion_catalog(sizes: Sizes, workers: int = 1) -> CriterionResult:
    res = CriterionResult(1, "catalog validity")
    tol = TOLERANCES["catalog_violation"]
    t0 = time.perf_counter()
    for n in (1, 2):
        for i, p in enumerate(canonical_catalog(n)):
            rep = validate_solution(p, step=TOLERANCES["catalog_step"], tol=tol)
            key = f"n{n}_{i}_{type(p).__name__}_k{p.homogeneity:g}"
            res.rows.append(("violation", key, rep.max_violation, ""))
            res.add(key, rep.max_violation <= tol, rep.max_violation, f"<= {tol:g}")
    elapsed = time.perf_counter() - t0
    res.add("runtime", elapsed < TOLERANCES["catalog_seconds"], None, f"< {TOLERANCES['catalog_seconds']:g} s")
    return res


# --- 2 -----------------------------------------------------------------------

def _contact_within_cells(result, profile, cells: float) -> bool:
    grid = result.grid
    exact = np.asarray(profile(grid.thin_points())) <= 0.0
    got = np.asarray(result.contact_mask, dtype=bool)
    bad = np.argwhere(exact != got)
    if bad.size == 0:
        return True
    k = int(math.ceil(cells))
    for idx in bad:
        lo = np.maximum(idx - k, 0)
        hi = np.minimum(idx + k + 1, exact.shape)
        window = exact[tuple(slice(a, b) for a, b in zip(lo, hi))]
        # a mismatch is tolerated only next to the analytic free boundary
        if window.all() or not window.any():
            return False
    return True


def criterion_solver(sizes: Sizes, workers: int = 1) -> CriterionResult:
    res = CriterionResult(2, "solver golden tests (2D)")
    t0 = time.perf_counter()
    grid = Grid(1, sizes.n1)
    quad = QuadraticProfile(np.eye(1))
    r = solve(SignoriniProblem(grid, quad))
    err = float(np.max(np.abs(r.u.values - _field(quad, grid).values)))
    bound = TOLERANCES["quadratic_error_tols"] * r.tol
    res.rows.append(("linf_error", f"quadratic_N{grid.N}", err, ""))
    res.add("quadratic_linf", err <= bound, err, f"<= {bound:g}")
    res.add("quadratic_contact", _contact_within_cells(r, quad, TOLERANCES["contact_cells"]))

    half = HalfPlaneSolution(1.5)
    errs = {}
    for N in (sizes.n1_coarse, sizes.n1):
        g = Grid(1, N)
        rr = solve(SignoriniProblem(g, half))
        errs[N] = float(np.max(np.abs(rr.u.values - _field(half, g).values)))
        res.rows.append(("linf_error", f"halfplane_1.5_N{N}", errs[N], ""))
        res.add(f"halfplane_contact_N{N}", _contact_within_cells(rr, half, TOLERANCES["contact_cells"]))
    ratio = errs[sizes.n1_coarse] / errs[sizes.n1]
    res.rows.append(("ratio", "halfplane_1.5", ratio, ""))
    res.add("halfplane_ratio", ratio >= TOLERANCES["halfplane_ratio_min"], ratio,
            f">= {TOLERANCES['halfplane_ratio_min']:g}")
    elapsed = time.perf_counter() - t0
    res.add("runtime", elapsed < TOLERANCES["solver_seconds"], None, f"< {TOLERANCES['solver_seconds']:g} s")
    return res


# --- 3 -----------------------------------------------------------------------

def _catalog_profile_radii(prof, h):
    return prof.radii[prof.radii >= TOLERANCES["phi_r_min_cells"] * h - 1e-12]


def _fb_point_near(result, x):
    pts = extract_free_boundary(result)
    if not pts:
        return None
    return min(pts, key=lambda p: float(np.sum((p.x - x) ** 2)))


def criterion_frequency(sizes: Sizes, workers: int = 1) -> CriterionResult:
    res = CriterionResult(3, "frequency fidelity")
    t0 = time.perf_counter()
    tol = TOLERANCES["phi_error"]
    for n, N in ((1, sizes.n1), (2, sizes.n2)):
        grid = Grid(n, N)
        for i, p in enumerate(canonical_catalog(n)):
            prof = frequency_profile(_field(p, grid), np.zeros(n + 1), TOLERANCES["phi_r_max"])
            radii = _catalog_profile_radii(prof, grid.h)
            phis = np.array([prof.phi_at(r) for r in radii])
            worst = float(np.max(np.abs(phis - p.homogeneity)))
            key = f"n{n}_{i}_{type(p).__name__}_k{p.homogeneity:g}"
            res.rows.append(("phi_error", key, worst, ""))
            res.rows.append(("violations", key, prof.violations, ""))
            res.add(f"phi_{key}", worst <= tol, worst, f"<= {tol:g}")
            res.add(f"monotone_{key}", prof.violations == 0, prof.violations, "== 0")

    grid = Grid(1, sizes.n1)
    for kappa, band in ((1.5, TOLERANCES["regular_band"]), (3.5, TOLERANCES["high_band"])):
        r = solve(SignoriniProblem(grid, HalfPlaneSolution(kappa)))
        # judged at the analytic free boundary point; the nearest discrete one is recorded too
        k = point_frequency(r.u, np.zeros(2)).kappa_hat
        res.rows.append(("kappa_hat", f"solved_{kappa:g}_origin", math.nan if k is None else k, ""))
        pt = _fb_point_near(r, np.zeros(2))
        if pt is not None:
            kd = point_frequency(r.u, pt.x).kappa_hat
            res.rows.append(("kappa_hat", f"solved_{kappa:g}_discrete_fb", math.nan if kd is None else kd,
                             f"x={pt.x[0]:.6f}"))
        ok = k is not None and band[0] <= k <= band[1]
        res.add(f"solved_{kappa:g}", ok, k, f"in [{band[0]:g}, {band[1]:g}]")
    elapsed = time.perf_counter() - t0
    res.add("runtime", elapsed < TOLERANCES["frequency_seconds"], None,
            f"< {TOLERANCES['frequency_seconds']:g} s")
    return res


# --- 4 and 5 share the random solves ----------------------------------------

def random_solves(n: int, N: int, seeds=RANDOM_SEEDS, workers: int = 1) -> list:
    grid = Grid(n, N)
    return _map(lambda s: solve(SignoriniProblem(grid, RandomDatum(n, s))), list(seeds), workers)


def _growth_counts(field, center, r_max, h, p, contact_threshold, delta):
    """Number of radius pairs checked and failed for ``u`` and for ``u - p``."""
    prof = frequency_profile(field, center, r_max)
    wprof = w_frequency_profile(field, p, center, r_max, contact_threshold)
    radii = prof.radii[prof.radii >= TOLERANCES["phi_r_min_cells"] * h - 1e-12]
    pairs = bad = bad_w = 0
    w_usable = wprof.kappa_hat is not None
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            pairs += 1
            bad += not all(growth_check(prof, radii[i], radii[j]))
            if w_usable:
                bad_w += not all(growth_check_w(wprof, radii[i], radii[j], delta))
    return pairs, bad, bad_w, w_usable


def _probe_quadratic(n: int) -> QuadraticProfile:
    A = np.zeros((n, n))
    A[0, 0] = 0.1
    return QuadraticProfile(A)


def criterion_growth(sizes: Sizes, workers: int = 1, solves=None) -> CriterionResult:
    res = CriterionResult(4, "growth bounds")
    delta = TOLERANCES["growth_delta"]
    for n, N in ((1, sizes.n1), (2, sizes.n2)):
        grid = Grid(n, N)
        p = _probe_quadratic(n)
        for i, prof in enumerate(canonical_catalog(n)):
            pairs, bad, bad_w, _ = _growth_counts(_field(prof, grid), np.zeros(n + 1), 0.5, grid.h, p,
                                                  None, delta)
            key = f"n{n}_{i}_{type(prof).__name__}_k{prof.homogeneity:g}"
            res.rows.append(("growth_violations", key, bad, f"pairs={pairs}"))
            res.rows.append(("growth_w_violations", key, bad_w, f"pairs={pairs}"))
            res.add(f"catalog_{key}", bad == 0 and bad_w == 0, bad + bad_w, "== 0")
    solves = solves if solves is not None else random_solves(1, sizes.n1, workers=workers)
    p = _probe_quadratic(1)
    for seed, r in zip(RANDOM_SEEDS, solves):
        grid = r.grid
        pts = [q for q in extract_free_boundary(r) if not q.low_confidence]
        centers = [q.x for q in pts] or [np.zeros(grid.dim)]
        total = bad_all = 0
        for c in centers:
            r_max = min(0.5, grid.clearance(c))
            pairs, bad, bad_w, _ = _growth_counts(r.u, c, r_max, grid.h, p, r.contact_threshold, delta)
            total += pairs
            bad_all += bad + bad_w
        res.rows.append(("growth_violations", f"random_seed{seed}", bad_all,
                         f"centers={len(centers)} pairs={total}"))
        res.add(f"random_seed{seed}", bad_all == 0, bad_all, "== 0")
    return res


def criterion_rigidity(sizes: Sizes, workers: int = 1, solves=None) -> CriterionResult:
    res = CriterionResult(5, "2D homogeneity rigidity")
    solves = solves if solves is not None else random_solves(1, sizes.n1, workers=workers)
    tol = TOLERANCES["rigidity_distance"]
    total = near = 0
    for seed, r in zip(RANDOM_SEEDS, solves):
        pts = [q for q in extract_free_boundary(r) if not q.low_confidence]
        for q in classify(r, pts, workers=workers):
            total += 1
            ok = is_near_S(q.kappa_hat, tol)
            near += ok
            k = math.nan if q.kappa_hat is None else q.kappa_hat
            res.rows.append(("kappa_hat", f"seed{seed}_x{q.x[0]:+.6f}", k, q.stratum))
    frac = near / total if total else math.nan
    res.rows.append(("fraction_near_S", "all", frac, f"points={total}"))
    res.add("points_available", total > 0, total, "> 0")
    res.add("fraction", total > 0 and frac >= TOLERANCES["rigidity_fraction"], frac,
            f">= {TOLERANCES['rigidity_fraction']:g}")
    return res


# --- 6 -----------------------------------------------------------------------

def criterion_orthogonality(sizes: Sizes, workers: int = 1) -> CriterionResult:
    res = CriterionResult(6, "orthogonality of second blow-ups")
    p2 = QuadraticProfile(np.diag([1.0, 0.0]))
    parity = HarmonicPolynomial.from_terms({(1, 1, 0): 1.0})
    rep = orthogonality_check(p2, parity)
    res.rows.append(("residual", "parity_x1x2", rep.equality_residual, ""))
    res.add("parity", abs(rep.equality_residual) <= TOLERANCES["parity_residual"], rep.equality_residual,
            f"<= {TOLERANCES['parity_residual']:g}")

    # constructed anomalous point: p2 plus a 2-homogeneous harmonic orthogonal to it
    grid = Grid(2, sizes.n2)
    q_true = QuadraticProfile(np.diag([1.0, -2.0]))
    u = ScalarField.from_function(grid, lambda x: p2(x) + 0.1 * q_true(x))
    sb = second_blowup(u, np.zeros(3), p2)
    res.rows.append(("lambda_hat", "anomalous", math.nan if sb.lambda_hat is None else sb.lambda_hat, sb.label))
    res.add("anomalous_label", sb.label == "anomalous", sb.lambda_hat)
    rel = TOLERANCES["orthogonality_rel"]
    if sb.q is None:
        res.add("equality", False)
        res.add("inequalities", False)
        return res
    rep = orthogonality_check(p2, sb.q)
    ratio = abs(rep.equality_residual) / (rep.p2_norm * rep.q_norm)
    res.rows.append(("relative_inner", "p2_q", ratio, ""))
    for label, v, nrm in rep.inequality_values:
        res.rows.append(("relative_inner", f"probe_{label}", v / nrm, ""))
    res.add("equality", rep.equality_ok(rel), ratio, f"<= {rel:g}")
    worst = max(v / nrm for _, v, nrm in rep.inequality_values)
    res.add("inequalities", rep.inequalities_ok(rel), worst, f"<= {rel:g}")
    return res


# --- 7, 8, 9: monotone families ---------------------------------------------

def quadratic_family(N: int, workers: int = 1, steps: int = 13):
    grid = Grid(1, N)
    ts = geometric_t_grid(1e-4, 1e-1, steps, negative=True)
    return build_family(QuadraticProfile(np.eye(1)), Lift(0.5), ts, grid, workers=workers)


def cubic_family(N: int, workers: int = 1, steps: int = 13, bump: bool = True):
    """Cubic trace, optionally plus a small nonnegative bump at the thin-boundary corner."""
    grid = Grid(1, N)
    ts = geometric_t_grid(1e-4, 1e-1, steps, negative=True)
    g0 = CubicProfile.from_matrix(np.eye(1))
    if bump:
        g0 = Combination(((1.0, g0), (1.0, Bump((1.0, 0.0), 0.5, 0.05))))
    return build_family(g0, Lift(0.5), ts, grid, workers=workers)


def criterion_hopf(sizes: Sizes, workers: int = 1, family=None) -> CriterionResult:
    res = CriterionResult(7, "Hopf estimate")
    fam = family or quadratic_family(sizes.family, workers)
    cs = {}
    for t in fam.t_grid:
        if t <= 0:
            continue
        c = verify_hopf(fam, t, 0.5)
        cs[t] = c
        res.rows.append(("c_est", f"t={t:.6g}", c, ""))
        res.add(f"positive_t={t:.3g}", c > 0, c, "> 0")
    window = [c for t, c in cs.items() if 1e-3 * (1 - 1e-9) <= t <= 1e-1 * (1 + 1e-9)]
    spread = max(window) / min(window) if window and min(window) > 0 else math.inf
    res.rows.append(("spread", "t in [1e-3, 1e-1]", spread, ""))
    res.add("stable", spread <= TOLERANCES["hopf_spread"], spread, f"<= {TOLERANCES['hopf_spread']:g}")
    return res


def _cleaning_rows(res, tag, c):
    for t, R, usable in c.rows():
        res.rows.append(("R", f"{tag}_t={t:.6g}", R, "usable" if usable else "excluded"))
    res.rows.append(("slope", tag, c.slope, "informative" if c.informative else "non-informative"))


def criterion_quadratic_cleaning(sizes: Sizes, workers: int = 1, family=None) -> CriterionResult:
    res = CriterionResult(8, "quadratic cleaning (vacate side)")
    t0 = time.perf_counter()
    fam = family or quadratic_family(sizes.family, workers)
    bound = TOLERANCES["quadratic_slope_max"]
    try:
        c = cleaning_exponent(fam, None, "vacate")
    except InsufficientRangeError as exc:
        res.notes.append(str(exc))
        res.add("informative", False)
        res.add("slope", False, None, f"<= {bound:g}")
    else:
        _cleaning_rows(res, "vacate", c)
        if not c.informative:
            res.notes.append("R(t) at the scan cap for every t: no contact near the origin for t > 0")
        res.add("informative", c.informative)
        res.add("slope", c.informative and c.slope <= bound, c.slope, f"<= {bound:g}")
        res.add("monotone", c.monotone)
    # supplementary: the opposite side of the same family is informative
    try:
        fill = cleaning_exponent(fam, None, "fill")
        _cleaning_rows(res, "supplementary_fill", fill)
        res.notes.append(f"supplementary fill-side slope {fill.slope:.3f}")
    except InsufficientRangeError as exc:
        res.notes.append(f"supplementary fill side: {exc}")
    res.add("runtime", time.perf_counter() - t0 < TOLERANCES["cleaning_seconds"], None,
            f"< {TOLERANCES['cleaning_seconds']:g} s")
    return res


def criterion_cubic_cleaning(sizes: Sizes, workers: int = 1) -> CriterionResult:
    res = CriterionResult(9, "cubic cleaning (fill side)")
    t0 = time.perf_counter()
    fam = cubic_family(sizes.family, workers)
    bound = TOLERANCES["cubic_slope_max"]
    filled = True
    for t in fam.t_grid:
        if t < 0:
            R = cleaning_radius(fam[t], np.zeros(2), "fill")
            res.rows.append(("R", f"fill_t={t:.6g}", R, ""))
            filled &= R > 0
    try:
        c = cleaning_exponent(fam, None, "fill")
    except InsufficientRangeError as exc:
        res.notes.append(str(exc))
        res.add("informative", False)
        res.add("slope", False, None, f"<= {bound:g}")
    else:
        _cleaning_rows(res, "fill", c)
        if not c.informative:
            res.notes.append("R(t) at the scan cap for every t: the thin space is fully in contact")
        res.add("informative", c.informative)
        res.add("slope", c.informative and c.slope <= bound, c.slope, f"<= {bound:g}")
        res.add("monotone", c.monotone)
    res.add("ball_in_contact", filled)
    # supplementary: vacate side of the pure cubic family
    try:
        vac = cleaning_exponent(cubic_family(sizes.family, workers, bump=False), None, "vacate")
        _cleaning_rows(res, "supplementary_pure_cubic_vacate", vac)
        res.notes.append(f"supplementary pure-cubic vacate slope {vac.slope:.3f}")
    except InsufficientRangeError as exc:
        res.notes.append(f"supplementary vacate side: {exc}")
    res.add("runtime", time.perf_counter() - t0 < TOLERANCES["cleaning_seconds"], None,
            f"< {TOLERANCES['cleaning_seconds']:g} s")
    return res


# --- 10 ----------------------------------------------------------------------

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


def rows_csv(results) -> str:
    lines = ["criterion,kind,key,value,extra"]
    for res in results:
        for kind, key, value, extra in res.rows:
            lines.append(",".join([str(res.number), kind, _csv_escape(key), format_value(value),
                                   _csv_escape(str(extra))]))
        for c in res.checks:
            if c.name == "runtime":
                continue
            lines.append(",".join([str(res.number), "check", _csv_escape(c.name), format_value(c.value),
                                   "pass" if c.passed else "fail"]))
    return "\n".join(lines) + "\n"


def _csv_escape(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def criterion_determinism(sizes: Sizes, workers: int = 1) -> CriterionResult:
    """Recompute the cheap solve-based criteria serially and on a pool; compare CSV bytes."""
    res = CriterionResult(10, "determinism")
    small = Sizes(min(sizes.n1, 65), min(sizes.n1_coarse, 33), min(sizes.n2, 33), min(sizes.family, 65))
    texts = []
    for w in (1, max(2, workers)):
        solves = random_solves(1, small.n1, workers=w)
        parts = [criterion_solver(small, w), criterion_rigidity(small, w, solves),
                 criterion_hopf(small, w)]
        texts.append(rows_csv(parts))
    res.rows.append(("bytes", "csv", len(texts[0]), ""))
    res.add("identical_csv", texts[0] == texts[1])
    return res


CRITERIA = {
    1: criterion_catalog,
    2: criterion_solver,
    3: criterion_frequency,
    4: criterion_growth,
    5: criterion_rigidity,
    6: criterion_orthogonality,
    7: criterion_hopf,
    8: criterion_quadratic_cleaning,
    9: criterion_cubic_cleaning,
    10: criterion_determinism,
}


def run_suite(quick: bool = False, only=None, workers: int | None = None, echo=print) -> list[CriterionResult]:
    """Run the selected criteria (all by default) and echo one line per criterion."""
    sizes = Sizes.for_mode(quick)
    workers = workers or thread_count()
    wanted = sorted(only) if only else sorted(CRITERIA)
    shared = {}
    out = []
    for k in wanted:
        t0 = time.perf_counter()
        try:
            if k in (4, 5):
                if "random" not in shared:
                    shared["random"] = random_solves(1, sizes.n1, workers=workers)
                res = CRITERIA[k](sizes, workers, shared["random"])
            elif k in (7, 8):
                if "quadratic" not in shared:
                    shared["quadratic"] = quadratic_family(sizes.family, workers)
                res = CRITERIA[k](sizes, workers, shared["quadratic"])
            else:
                res = CRITERIA[k](sizes, workers)
        except SignoriniError as exc:
            res = CriterionResult(k, CRITERIA[k].__name__.removeprefix("criterion_"))
            res.add("completed", False)
            res.notes.append(f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
        if echo is not None:
            echo(res.line())
            for note in res.notes:
                echo(f"    note: {note}")
    return out
