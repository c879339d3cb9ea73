"""Command-line front end: ``qgenfun {scan,compare,point,validate-config}``."""

import argparse
import json
import sys

import numpy as np

from .. import __version__
from ..errors import ConfigInvalid, QGeomError
from ..geometry import geometry_report
from ..states import build_family, load_model_config
from .scan import QUANTITIES, audit_to_csv, compare_routes, emit, parse_scan_spec, run_scan

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _grid_arg(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid axis must look like MIN:MAX:COUNT")
    try:
        return {"min": float(parts[0]), "max": float(parts[1]), "count": int(parts[2])}
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _common(p):
    p.add_argument("--model-config", help="model config JSON file (overrides the scan file's model)")
    p.add_argument("--spec", help="scan spec JSON file")
    p.add_argument("--grid", action="append", type=_grid_arg, metavar="MIN:MAX:COUNT",
                   help="one per parameter; overrides the scan file grid")
    p.add_argument("--grid-prime", action="append", type=_grid_arg, metavar="MIN:MAX:COUNT")
    p.add_argument("--quantity", action="append", choices=QUANTITIES)
    p.add_argument("--h2", type=float)
    p.add_argument("--h3", type=float)
    p.add_argument("--richardson", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--use-log", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="qgenfun", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qgenfun {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("scan", help="evaluate quantities over a parameter grid"))
    _common(sub.add_parser("compare", help="audit agreement between routes"))
    p = sub.add_parser("point", help="dump the geometry report at one point")
    p.add_argument("--model-config", required=True)
    p.add_argument("--x", type=float, action="append", required=True,
                   help="parameter value, repeat once per parameter")
    p.add_argument("--out")
    p = sub.add_parser("validate-config", help="check a model config and print it normalized")
    p.add_argument("--model-config", required=True)
    return parser


def _spec_from_args(args):
    data = {}
    if args.spec:
        try:
            with open(args.spec) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read scan spec: {exc}") from exc
    model = load_model_config(args.model_config).to_dict() if args.model_config else None
    if args.grid:
        data["grid"] = args.grid
    if args.grid_prime:
        data["grid_prime"] = args.grid_prime
    if args.quantity:
        data["quantities"] = args.quantity
    st = dict(data.get("stencil", {}))
    for key in ("h2", "h3", "richardson"):
        if getattr(args, key) is not None:
            st[key] = getattr(args, key)
    data["stencil"] = st
    if args.use_log is not None:
        data["use_log"] = args.use_log
    if args.workers is not None:
        data["workers"] = args.workers
    return parse_scan_spec(data, model_override=model)


def _write(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def cmd_scan(args):
    spec = _spec_from_args(args)
    result = run_scan(spec)
    text = emit(result, args.format)
    _write(text, args.out)
    return EXIT_PARTIAL if result.has_errors else EXIT_OK


def cmd_compare(args):
    spec = _spec_from_args(args)
    audit = compare_routes(spec)
    summary = audit.summary()
    if args.format == "json":
        text = json.dumps({"summary": summary,
                           "failures": [list(f) for f in audit.failures],
                           "passed": audit.passed}, indent=1)
    else:
        text = audit_to_csv(audit)
    _write(text, args.out)
    for s in summary:
        status = "ok" if s["passed"] else "VIOLATION"
        print(f"{s['quantity']:12s} {s['routes']:24s} n={s['n']:<5d} "
              f"max_abs={s['max_abs']:.3e} max_rel={s['max_rel']:.3e} {status}",
              file=sys.stderr)
    for coords, q, route, code in audit.failures:
        print(f"{q} {route} failed at {coords}: {code}", file=sys.stderr)
    if not all(s["passed"] for s in summary):
        return EXIT_TOLERANCE
    return EXIT_PARTIAL if audit.failures else EXIT_OK


def cmd_point(args):
    family = build_family(args.model_config)
    if len(args.x) != family.param_dim:
        raise ConfigInvalid(f"--x given {len(args.x)} times, family has {family.param_dim} parameters")
    rep = geometry_report(family, args.x)
    out = {k: _jsonable(getattr(rep, k)) for k in ("at", "qfim", "method", "christoffel")}
    out["metric"] = rep.metric.tolist()
    if rep.berry is not None:
        out["berry"] = rep.berry.tolist()
    out["diagnostics"] = {k: _jsonable(v) for k, v in rep.diagnostics.items()}
    _write(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args):
    cfg = load_model_config(args.model_config)
    build_family(cfg)
    print(json.dumps(cfg.to_dict(), sort_keys=True))
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "compare": cmd_compare, "point": cmd_point,
            "validate-config": cmd_validate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QGeomError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
