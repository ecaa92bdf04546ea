"""Experiment configuration, runners, and artifact bookkeeping for the CLI.

A configuration is one JSON document::

    {
      "kind": "stratify",
      "n": 1, "N": 129,
      "solver": {"omega": 1.9, "tol": 1e-10, "max_iters": 200000},
      "analysis": {"bands": {"clearance": 0.25}},
      "params": {"field": "run/field.sigf"},
      "out": "strata-run"
    }

``params`` holds the kind-specific settings listed in :data:`PARAMS`.
Artifacts are written to a staging directory next to ``out`` and moved
into place only when the run succeeds, so a failed run leaves nothing
behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import AnalysisConfig
from .solver import DEFAULT_MAX_ITERS, DEFAULT_OMEGA, DEFAULT_TOL

log = logging.getLogger(__name__)

KINDS = ("solve", "frequency", "blowup", "stratify", "family", "catalog-validate", "acceptance-suite")

# kind -> {param: (type, default)}; a default of ... marks a required parameter
PARAMS = {
    "solve": {"datum": (str, ...)},
    "frequency": {"field": (str, None), "datum": (str, None), "center": (list, None),
                  "r_max": (float, 0.5), "p": (str, None)},
    "blowup": {"field": (str, None), "datum": (str, None), "x0": (list, None)},
    "stratify": {"field": (str, None), "datum": (str, None), "clearance": (float, None),
                 "scales": (list, [0.25, 0.125, 0.0625, 0.03125])},
    "family": {"g0": (str, ...), "psi": (str, ...), "tmin": (float, 1e-4), "tmax": (float, 1e-1),
               "steps": (int, 13), "negative": (bool, True), "x0": (list, None),
               "hopf_r": (float, 0.5), "save_fields": (bool, True)},
    "catalog-validate": {"samples": (int, 2000), "step": (float, 1e-4), "tol": (float, 1e-6)},
    "acceptance-suite": {"quick": (bool, False), "only": (list, None)},
}

TOP_LEVEL = {"kind", "n", "N", "solver", "analysis", "params", "out"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SolverSettings:
    omega: float = DEFAULT_OMEGA
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    n: int = 1
    N: int = 129
    solver: SolverSettings = field(default_factory=SolverSettings)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    params: dict = field(default_factory=dict)
    out: str = "out"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "N": self.N,
                "solver": {"omega": self.solver.omega, "tol": self.solver.tol,
                           "max_iters": self.solver.max_iters},
                "analysis": self.analysis.to_dict(), "params": dict(self.params), "out": self.out}

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, ``out`` excluded."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _coerce(name: str, value, typ):
    if value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(name, f"expected true/false, got {value!r}")
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(name, f"expected an integer, got {value!r}")
        return int(value)
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(name, f"expected a finite number, got {value!r}")
        return float(value)
    if typ is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(name, f"expected a list, got {value!r}")
        return list(value)
    if typ is str:
        if isinstance(value, dict):
            return json.dumps(value, sort_keys=True)
        if not isinstance(value, str):
            raise ConfigError(name, f"expected a string, got {value!r}")
        return value
    return value


def parse_config(d: dict) -> ExperimentConfig:
    """Validate a raw configuration dict; every error names its field."""
    if not isinstance(d, dict):
        raise ConfigError("config", "must be a JSON object")
    unknown = set(d) - TOP_LEVEL
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {', '.join(KINDS)}; got {kind!r}")
    n = _coerce("n", d.get("n", 1), int)
    if n not in (1, 2):
        raise ConfigError("n", f"must be 1 or 2, got {n}")
    N = _coerce("N", d.get("N", 129), int)
    if N < 33 or N % 2 == 0:
        raise ConfigError("N", f"must be odd and >= 33, got {N}")
    raw_solver = d.get("solver") or {}
    if not isinstance(raw_solver, dict):
        raise ConfigError("solver", "must be an object")
    bad = set(raw_solver) - {"omega", "tol", "max_iters"}
    if bad:
        raise ConfigError(f"solver.{sorted(bad)[0]}", "unknown solver setting")
    omega = _coerce("solver.omega", raw_solver.get("omega", DEFAULT_OMEGA), float)
    if not 1.0 < omega < 2.0:
        raise ConfigError("solver.omega", f"must lie in (1, 2), got {omega}")
    tol = _coerce("solver.tol", raw_solver.get("tol", DEFAULT_TOL), float)
    if not 0.0 < tol < 1e-2:
        raise ConfigError("solver.tol", f"must lie in (0, 1e-2), got {tol}")
    max_iters = _coerce("solver.max_iters", raw_solver.get("max_iters", DEFAULT_MAX_ITERS), int)
    if max_iters < 1:
        raise ConfigError("solver.max_iters", "must be positive")
    try:
        analysis = AnalysisConfig.from_dict(d.get("analysis"))
    except (TypeError, ValueError) as exc:
        raise ConfigError("analysis", str(exc)) from None
    raw_params = d.get("params") or {}
    if not isinstance(raw_params, dict):
        raise ConfigError("params", "must be an object")
    schema = PARAMS[kind]
    bad = set(raw_params) - set(schema)
    if bad:
        raise ConfigError(f"params.{sorted(bad)[0]}", f"not a parameter of {kind}")
    params = {}
    for name, (typ, default) in schema.items():
        value = _coerce(f"params.{name}", raw_params.get(name), typ)
        if value is None:
            if default is ...:
                raise ConfigError(f"params.{name}", f"required for {kind}")
            value = default
        params[name] = value
    _check_params(kind, n, params)
    out = d.get("out", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("out", "must be a non-empty path")
    return ExperimentConfig(kind, n, N, SolverSettings(omega, tol, max_iters), analysis, params, out)


def _check_params(kind: str, n: int, p: dict) -> None:
    if kind in ("frequency", "blowup", "stratify") and not (p.get("field") or p.get("datum")):
        raise ConfigError("params.field", f"{kind} needs a field file or a datum to solve")
    for key in ("center", "x0"):
        if p.get(key) is not None and len(p[key]) not in (n, n + 1):
            raise ConfigError(f"params.{key}", f"needs {n} or {n + 1} coordinates")
    if kind == "frequency" and p["r_max"] <= 0:
        raise ConfigError("params.r_max", "must be positive")
    if kind == "family":
        if not 0 < p["tmin"] <= p["tmax"] <= 1:
            raise ConfigError("params.tmin", "need 0 < tmin <= tmax <= 1")
        if p["steps"] < 1:
            raise ConfigError("params.steps", "must be positive")
        if not 0 < p["hopf_r"] <= 0.5:
            raise ConfigError("params.hopf_r", "must lie in (0, 1/2]")
    if kind == "stratify" and (len(p["scales"]) < 2 or min(p["scales"]) <= 0):
        raise ConfigError("params.scales", "need at least two positive scales")
    if kind == "catalog-validate" and p["samples"] < 1000:
        raise ConfigError("params.samples", "must be at least 1000")
    if kind == "acceptance-suite" and p.get("only"):
        if any(not isinstance(k, int) or not 1 <= k <= 10 for k in p["only"]):
            raise ConfigError("params.only", "criterion numbers lie in 1..10")


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None


# --- artifacts ---------------------------------------------------------------

def csv_text(header, rows) -> str:
    """Deterministic CSV: fixed float formatting, ``\\n`` line endings."""
    from .acceptance import format_value

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else format_value(v) for v in row])
    return buf.getvalue()


class Artifacts:
    """Collects files in a staging directory; :meth:`commit` moves them to ``out``."""

    def __init__(self, out: Path):
        self.out = Path(out)
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=f".{self.out.name}-", dir=self.out.parent))
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        p = self.stage / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return p

    def text(self, name: str, content: str) -> None:
        self.path(name).write_text(content)

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header, rows) -> None:
        self.text(name, csv_text(header, rows))

    def checksums(self) -> dict:
        return {name: hashlib.sha256(self.path(name).read_bytes()).hexdigest() for name in sorted(self.files)}

    def commit(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for name in self.files:
            dst = self.out / name
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(self.stage / name), str(dst))
        shutil.rmtree(self.stage, ignore_errors=True)

    def discard(self) -> None:
        shutil.rmtree(self.stage, ignore_errors=True)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def versions() -> dict:
    import numba
    import scipy

    return {"signorini_lab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_manifest(art: Artifacts, cfg: ExperimentConfig, seconds: float, extra: dict | None = None) -> None:
    manifest = {"kind": cfg.kind, "config": cfg.to_dict(), "config_sha256": cfg.digest(),
                "versions": versions(), "wall_seconds": round(seconds, 3),
                "artifacts": art.checksums()}
    if extra:
        manifest.update(extra)
    art.json("manifest.json", manifest)


# --- runners -----------------------------------------------------------------

def _thin_point(coords, n: int) -> np.ndarray:
    x = np.zeros(n + 1)
    if coords is not None:
        x[: len(coords)] = coords
    return x


def _obtain_field(cfg: ExperimentConfig):
    """Load ``params.field`` or solve ``params.datum``; returns (field, solve result or None)."""
    from .data import load_datum
    from .geometry import Grid, load_field
    from .solver import SignoriniProblem, solve

    p = cfg.params
    if p.get("field"):
        return load_field(p["field"]), None
    grid = Grid(cfg.n, cfg.N)
    s = cfg.solver
    res = solve(SignoriniProblem(grid, load_datum(p["datum"]), s.omega, s.tol, s.max_iters))
    return res.u, res


def _contact_threshold(cfg: ExperimentConfig, field_) -> float:
    return max(10.0 * cfg.solver.tol, field_.grid.h ** 3)


def run_solve(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .data import load_datum
    from .geometry import Grid, save_field
    from .solver import SignoriniProblem, solve

    grid = Grid(cfg.n, cfg.N)
    s = cfg.solver
    datum = load_datum(cfg.params["datum"])
    res = solve(SignoriniProblem(grid, datum, s.omega, s.tol, s.max_iters))
    save_field(art.path("field.sigf"), res.u)
    thin = grid.thin_points().reshape(-1, grid.dim)
    mask = np.asarray(res.contact_mask).reshape(-1)
    vals = res.u.thin_values.reshape(-1)
    header = [f"x{i + 1}" for i in range(grid.n)] + ["u", "contact"]
    art.csv("thin.csv", header, [tuple(x[: grid.n]) + (v, int(m)) for x, v, m in zip(thin, vals, mask)])
    summary = {"iterations": res.iterations, "converged": res.converged, "last_update": res.last_update,
               "residuals": vars(res.residuals), "contact_nodes": int(mask.sum()),
               "contact_threshold": res.contact_threshold, "grid": grid.to_dict()}
    art.json("solve.json", summary)
    return summary


def run_frequency(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .catalog import profile_from_json
    from .frequency import frequency_profile, w_frequency_profile

    u, _ = _obtain_field(cfg)
    p = cfg.params
    center = _thin_point(p["center"], u.grid.n)
    settings = cfg.analysis.frequency
    if p.get("p"):
        prof = w_frequency_profile(u, profile_from_json(p["p"]), center, p["r_max"],
                                   _contact_threshold(cfg, u), settings)
    else:
        prof = frequency_profile(u, center, p["r_max"], settings)
    art.csv("frequency.csv", prof.columns(), prof.rows())
    summary = {"center": center, "kappa_hat": prof.kappa_hat, "kappa_star": prof.kappa_star,
               "kappa_fit": prof.kappa_fit, "flagged": prof.flagged, "reliable": prof.reliable,
               "violations": prof.violations, "pairs": prof.pairs}
    art.json("frequency.json", summary)
    return summary


def run_blowup(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .strata import FreeBoundaryPoint, classify

    u, _ = _obtain_field(cfg)
    x0 = _thin_point(cfg.params["x0"], u.grid.n)
    idx = u.grid.node_index(x0)
    pt = FreeBoundaryPoint(idx[: u.grid.n], x0, u.grid.clearance(x0), False)
    (out,) = classify(u, [pt], cfg.analysis, _contact_threshold(cfg, u))
    if out.profile is not None:
        art.csv("frequency.csv", out.profile.columns(), out.profile.rows())
    summary = {"x0": x0, "kappa_hat": out.kappa_hat, "stratum": out.stratum, "note": out.note,
               "payload": out.payload_dict()}
    art.json("blowup.json", summary)
    return summary


def run_stratify(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .families import thread_count
    from .strata import (REG, UNRESOLVED, box_counting_dimension, classify, extract_free_boundary,
                         free_boundary_coordinates)
    from .solver import SolveResult

    u, res = _obtain_field(cfg)
    gate = cfg.params["clearance"]
    gate = cfg.analysis.bands.clearance if gate is None else gate
    if res is None:
        # a loaded field carries no contact mask; rebuild it from the threshold
        thr = _contact_threshold(cfg, u)
        mask = u.thin_values <= thr
        res = SolveResult(u, 0, None, mask, cfg.solver.tol, cfg.solver.omega, 0.0, True)
    pts = extract_free_boundary(res, gate)
    qualified = [q for q in pts if not q.low_confidence]
    # low-clearance points are listed as unresolved without further analysis
    classified = classify(u, pts, cfg.analysis, _contact_threshold(cfg, u), workers=thread_count())
    n = u.grid.n
    header = [f"x{i + 1}" for i in range(n)] + ["kappa_hat", "stratum", "clearance"]
    rows = []
    payloads = 0
    for i, q in enumerate(classified):
        rows.append(tuple(q.x[:n]) + (math.nan if q.kappa_hat is None else q.kappa_hat, q.stratum,
                                       q.clearance))
        if q.stratum not in (REG, UNRESOLVED) or q.payload is not None:
            art.json(f"payloads/point_{i:04d}.json",
                     {"x": q.x, "kappa_hat": q.kappa_hat, "stratum": q.stratum, "note": q.note,
                      "payload": q.payload_dict()})
            payloads += 1
    art.csv("strata.csv", header, rows)
    counts = {}
    for q in classified:
        counts[q.stratum] = counts.get(q.stratum, 0) + 1
    summary = {"free_boundary_points": len(pts), "qualified": len(qualified), "strata": counts,
               "payload_files": payloads}
    if len(pts) >= 1:
        bc = box_counting_dimension(free_boundary_coordinates(pts), cfg.params["scales"])
        summary["box_counting"] = {"dimension": bc.dimension, "scales": bc.scales, "counts": bc.counts,
                                   "r_squared": bc.r_squared, "flagged": bc.flagged, "reason": bc.reason}
    art.json("strata.json", summary)
    return summary


def run_family(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .data import load_datum
    from .errors import InsufficientRangeError
    from .families import (build_family, cleaning_exponent, geometric_t_grid, tau_map, thin_growth,
                           verify_hopf)
    from .geometry import Grid, save_field

    p = cfg.params
    grid = Grid(cfg.n, cfg.N)
    s = cfg.solver
    ts = geometric_t_grid(p["tmin"], p["tmax"], p["steps"], negative=p["negative"])
    fam = build_family(load_datum(p["g0"]), load_datum(p["psi"]), ts, grid, s.omega, s.tol, s.max_iters)
    if p["save_fields"]:
        for i, t in enumerate(fam.t_grid):
            save_field(art.path(f"fields/t{i:03d}.sigf"), fam[t].u)
        art.csv("fields/index.csv", ["file", "t"], [(f"t{i:03d}.sigf", t) for i, t in enumerate(fam.t_grid)])
    x0 = _thin_point(p["x0"], grid.n)
    cleaning_rows, fits = [], {}
    for side in ("vacate", "fill"):
        try:
            c = cleaning_exponent(fam, x0, side)
        except InsufficientRangeError as exc:
            fits[side] = {"error": str(exc)}
            continue
        cleaning_rows += [(side, t, R, int(u)) for t, R, u in c.rows()]
        fits[side] = {"slope": c.slope, "intercept": c.intercept, "informative": c.informative,
                      "monotone": c.monotone}
    art.csv("cleaning.csv", ["side", "t", "R", "usable"], cleaning_rows)
    hopf_rows = [(t, verify_hopf(fam, t, p["hopf_r"], x0)) for t in fam.t_grid if t > 0]
    art.csv("hopf.csv", ["t", "c_est"], hopf_rows)
    tau = tau_map(fam)
    n = grid.n
    art.csv("tau.csv", [f"x{i + 1}" for i in range(n)] + ["t_min", "t_max", "flagged"],
            [tuple(v.x[:n]) + (v.t_min, v.t_max, int(v.flagged)) for v in tau.values()])
    growth = {}
    for t in fam.t_grid:
        if t > 0:
            try:
                fit = thin_growth(fam, t, x0)
                growth[f"{t:.6g}"] = fit.slope
            except (InsufficientRangeError, ValueError) as exc:
                growth[f"{t:.6g}"] = str(exc)
    flagged = sum(v.flagged for v in tau.values())
    summary = {"t_grid": fam.t_grid, "monotonicity": vars(fam.monotonicity), "cleaning": fits,
               "thin_growth_slopes": growth, "tau_nodes": len(tau), "tau_flagged": flagged}
    art.json("family.json", summary)
    return summary


def run_catalog(cfg: ExperimentConfig, art: Artifacts) -> dict:
    from .catalog import canonical_catalog, validate_solution

    p = cfg.params
    rows = []
    ok = True
    for n in (1, 2):
        for prof in canonical_catalog(n):
            rep = validate_solution(prof, samples=p["samples"], step=p["step"], tol=p["tol"])
            rows.append((n, type(prof).__name__, prof.homogeneity, rep.max_violation, int(rep.valid),
                         json.dumps(prof.to_dict(), sort_keys=True)))
            ok &= rep.valid
    art.csv("catalog.csv", ["n", "profile", "kappa", "max_violation", "valid", "definition"], rows)
    return {"all_valid": ok, "profiles": len(rows)}


def run_acceptance(cfg: ExperimentConfig, art: Artifacts, echo=print) -> dict:
    from .acceptance import rows_csv, run_suite

    results = run_suite(quick=cfg.params["quick"], only=cfg.params["only"], echo=echo)
    art.text("acceptance.csv", rows_csv(results))
    report = [{"criterion": r.number, "title": r.title, "passed": r.passed, "seconds": round(r.seconds, 3),
               "notes": r.notes,
               "checks": [{"name": c.name, "passed": c.passed, "value": c.value, "bound": c.bound}
                          for c in r.checks]} for r in results]
    art.json("acceptance.json", report)
    return {"passed": [r.number for r in results if r.passed],
            "failed": [r.number for r in results if not r.passed]}


RUNNERS = {
    "solve": run_solve,
    "frequency": run_frequency,
    "blowup": run_blowup,
    "stratify": run_stratify,
    "family": run_family,
    "catalog-validate": run_catalog,
    "acceptance-suite": run_acceptance,
}


def run(cfg: ExperimentConfig) -> dict:
    """Execute one experiment; artifacts appear in ``cfg.out`` only on success."""
    art = Artifacts(Path(cfg.out))
    t0 = time.perf_counter()
    try:
        summary = RUNNERS[cfg.kind](cfg, art)
        write_manifest(art, cfg, time.perf_counter() - t0, {"summary": summary})
    except BaseException:
        art.discard()
        raise
    art.commit()
    return summary
