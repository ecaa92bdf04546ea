"""Command line entry point: ``signorini-lab <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (a JSON experiment document, see
:mod:`signorini_lab.experiment`); flags given on the command line override
the corresponding config fields.  Exit status: 0 on success, 2 for an
invalid configuration, 1 when a computation fails, 3 when
``acceptance-suite`` completes with failing criteria.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import SignoriniError
from .experiment import KINDS, ConfigError, jsonable, load_config_file, parse_config, run

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_CRITERIA = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# (flag, param name, argparse kwargs) per subcommand
_KIND_FLAGS = {
    "solve": [("--datum", "datum", {"help": "boundary datum: inline JSON or a JSON file"})],
    "frequency": [
        ("--field", "field", {"help": "field file written by `solve`"}),
        ("--datum", "datum", {"help": "solve this datum instead of loading a field"}),
        ("--center", "center", {"type": _floats, "help": "thin-space center, e.g. 0,0"}),
        ("--r-max", "r_max", {"type": float}),
        ("--p", "p", {"help": "quadratic profile JSON; profiles u - p with the correction term"}),
    ],
    "blowup": [
        ("--field", "field", {}),
        ("--datum", "datum", {}),
        ("--x0", "x0", {"type": _floats, "help": "thin-space point"}),
    ],
    "stratify": [
        ("--field", "field", {}),
        ("--datum", "datum", {}),
        ("--clearance", "clearance", {"type": float}),
        ("--scales", "scales", {"type": _floats, "help": "box-counting scales"}),
    ],
    "family": [
        ("--g0", "g0", {"help": "base datum (JSON or file)"}),
        ("--psi", "psi", {"help": "monotone perturbation datum (JSON or file)"}),
        ("--tmin", "tmin", {"type": float}),
        ("--tmax", "tmax", {"type": float}),
        ("--steps", "steps", {"type": int}),
        ("--x0", "x0", {"type": _floats}),
        ("--hopf-r", "hopf_r", {"type": float}),
        ("--positive-only", "negative", {"action": "store_const", "const": False,
                                         "help": "skip the negative half of the t grid"}),
        ("--no-fields", "save_fields", {"action": "store_const", "const": False,
                                        "help": "do not write per-t field files"}),
    ],
    "catalog-validate": [
        ("--samples", "samples", {"type": int}),
        ("--step", "step", {"type": float}),
        ("--tol", "tol", {"type": float, "dest": "param_tol"}),
    ],
    "acceptance-suite": [
        ("--quick", "quick", {"action": "store_const", "const": True, "help": "run at N=65"}),
        ("--only", "only", {"type": _ints, "help": "criterion numbers, e.g. 1,2,5"}),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signorini-lab", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="kind", required=True, metavar="SUBCOMMAND")
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--n", type=int, help="thin dimension (1 or 2)")
        p.add_argument("--N", type=int, help="grid nodes per thin axis (odd, >= 33)")
        p.add_argument("--omega", type=float, help="SOR relaxation factor")
        if kind != "catalog-validate":
            p.add_argument("--tol", type=float, help="solver tolerance")
        p.add_argument("--max-iters", type=int)
        for flag, name, kw in _KIND_FLAGS[kind]:
            kw = dict(kw)
            kw.setdefault("dest", f"param_{name}")
            kw.setdefault("default", None)
            p.add_argument(flag, **kw)
    return parser


def merged_config(args: argparse.Namespace) -> dict:
    """Config file contents overridden by explicit flags."""
    raw = load_config_file(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise ConfigError("config", "must be a JSON object")
    raw = dict(raw)
    if raw.get("kind", args.kind) != args.kind:
        raise ConfigError("kind", f"config is for {raw['kind']!r}, not {args.kind!r}")
    raw["kind"] = args.kind
    for key in ("n", "N"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    if args.out is not None:
        raw["out"] = args.out
    solver = dict(raw.get("solver") or {})
    for key, attr in (("omega", "omega"), ("tol", "tol"), ("max_iters", "max_iters")):
        value = getattr(args, attr, None)
        if value is not None:
            solver[key] = value
    if solver:
        raw["solver"] = solver
    params = dict(raw.get("params") or {})
    for _, name, kw in _KIND_FLAGS[args.kind]:
        value = getattr(args, kw.get("dest", f"param_{name}"), None)
        if value is not None:
            params[name] = value
    raw["params"] = params
    return raw


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(merged_config(args))
    except ConfigError as exc:
        print(f"signorini-lab: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run(cfg)
    except (SignoriniError, ValueError, OSError) as exc:
        print(f"signorini-lab {cfg.kind}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    if cfg.kind == "acceptance-suite":
        return EXIT_CRITERIA if summary["failed"] else EXIT_OK
    brief = {k: v for k, v in summary.items() if not isinstance(v, dict)}
    print(json.dumps(jsonable({"out": cfg.out} | brief), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
