"""Command-line entry point: ``python -m floatlab <subcommand> ...``.

Exit codes: 0 success, 1 a requested check failed, 2 usage or parse error,
3 numerical error (reported as JSON on stdout).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .convexfn import ConstructionError, ConvexityError, Ellipse, NotCoerciveError, spec_for
from .epigraph import DomainError, HyperplaneCut, RegionError, cap_volume, rolling_function
from .experiments import (DeltaLadder, GridSpec, cap_sandwich_check, finiteness_suite, proposition_ratio,
                          theorem_ratio, uniform_bound_check)
from .floating import FloatParams, FloatingTable, SearchBoxError, floating_grid
from .fnspec import SpecError, parse_function
from .numerics import BracketError, QuadratureError, QuadratureSpec, SearchSpec
from .surface import (BodyBoundary2D, PreconditionError, asa, asa_alternative, asp_body,
                      check_affine_invariance, check_gauge_relation, check_isoperimetric, check_valuation)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

NUMERIC_ERRORS = (RegionError, SearchBoxError, QuadratureError, BracketError, ConvexityError,
                  NotCoerciveError, DomainError, FloatingPointError, PreconditionError)


class UsageError(ValueError):
    pass


# ------------------------------------------------------------- parsing


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad {what}: {text!r}") from None


def _range(text: str, what: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what} must be lo:hi:count, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"bad {what}: {text!r}") from None


def parse_grid(text: str) -> np.ndarray:
    axes = []
    for part in text.split(","):
        lo, hi, count = _range(part, "grid")
        if count < 1:
            raise UsageError("grid count must be positive")
        axes.append(np.linspace(lo, hi, count))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def parse_ladder(text: str) -> DeltaLadder:
    hi, lo, count = _range(text, "ladder")
    try:
        return DeltaLadder(hi, lo, count)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_body(text: str) -> BodyBoundary2D:
    kind, _, rest = text.partition(":")
    vals = _floats(rest, "body")
    if kind == "disk" and len(vals) == 1:
        return BodyBoundary2D.disk(vals[0])
    if kind == "ellipse" and len(vals) in (2, 3):
        return BodyBoundary2D.ellipse(*vals)
    raise UsageError("body must be disk:r or ellipse:rx,ry[,angle]")


def parse_config(path: str) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _fn(text: str, dim: int | None = None):
    try:
        return parse_function(text, dim)
    except (SpecError, ConstructionError) as exc:
        raise UsageError(f"function spec: {exc}") from None


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(abs_tol=args.abs_tol, rel_tol=args.rel_tol)


# ------------------------------------------------------------ commands


def cmd_capvol(args):
    psi = _fn(args.fn)
    slope = _floats(args.slope, "slope")
    if len(slope) != psi.dim:
        raise UsageError("slope dimension does not match the function")
    spec = spec_for(psi, _quad(args))
    v = cap_volume(psi, HyperplaneCut(tuple(slope), args.offset), spec)
    return {"cap_volume": v, "config": {"fn": args.fn, "slope": slope, "offset": args.offset,
                                        "truncation_radius": spec.truncation_radius}}, True


def cmd_float(args):
    psi = _fn(args.fn)
    if (args.point is None) == (args.grid is None):
        raise UsageError("give exactly one of --point or --grid")
    pts = np.array([_floats(args.point, "point")]) if args.point else parse_grid(args.grid)
    if pts.shape[1] != psi.dim:
        raise UsageError("point dimension does not match the function")
    spec = spec_for(psi, _quad(args))
    params = FloatParams(args.delta, args.cut_rtol, SearchSpec(), spec, args.method)
    table = floating_grid(psi, pts, params)
    if args.point and table.errors:
        # a single point: surface the failure as a numerical error
        raise RegionError(table.errors[0])
    config = {"fn": args.fn, "delta": args.delta, "cut_volume_rtol": args.cut_rtol, "method": args.method,
              "abs_tol": spec.abs_tol, "rel_tol": spec.rel_tol, "truncation_radius": spec.truncation_radius}
    out = {"evaluations": [asdict(e) if e else None for e in table.evaluations],
           "errors": {str(k): v for k, v in table.errors.items()}, "config": config}
    return out, True, table


def cmd_asa(args):
    psi = _fn(args.fn)
    spec = spec_for(psi, _quad(args))
    res = (asa_alternative if args.alt else asa)(psi, spec, full_output=True)
    return {"value": res.value, "error": res.error, "skipped_nodes": res.skipped_nodes,
            "functional": "alternative" if args.alt else "asa",
            "config": {"fn": args.fn, "abs_tol": spec.abs_tol, "rel_tol": spec.rel_tol,
                       "truncation_radius": spec.truncation_radius}}, True


def cmd_asp(args):
    K = parse_body(args.body)
    v = asp_body(K, args.p)
    return {"value": v, "config": {"body": args.body, "p": args.p}}, True


def cmd_converge(args):
    psi = _fn(args.fn)
    ladder = parse_ladder(args.ladder) if args.ladder else None
    grid = None
    if args.grid:
        parts = [_range(p, "grid") for p in args.grid.split(",")]
        lo, hi, count = parts[0]
        if abs(lo + hi) > 1e-12 * max(abs(lo), abs(hi), 1):
            raise UsageError("convergence grids are symmetric: use -w:w:count")
        grid = GridSpec(count, hi)
    spec = spec_for(psi, _quad(args))
    params = FloatParams(1e-3, args.cut_rtol, SearchSpec(), spec, args.method)
    run = theorem_ratio if args.mode == "theorem" else proposition_ratio
    rep = run(psi, ladder, grid, params, spec)
    return rep, True


def _check_one(prop: str, cfg: dict[str, str], args):
    tol = float(cfg["tol"]) if "tol" in cfg else None
    kw = {} if tol is None else {"tol": tol}
    if prop == "invariance":
        psi = _fn(cfg["fn"])
        n = psi.dim
        A = np.array(_floats(cfg.get("A", "2" if n == 1 else "2,0,0,1"), "A")).reshape(n, n)
        t = _floats(cfg.get("t", ",".join(["0"] * n)), "t")
        return check_affine_invariance(psi, A, t, **kw)
    if prop == "valuation":
        return check_valuation(_fn(cfg["fn1"]), _fn(cfg["fn2"]), **kw)
    if prop == "isoperimetric":
        return check_isoperimetric(_fn(cfg["fn"]), **kw)
    if prop == "gauge":
        vals = _floats(cfg.get("body", "disk:1").partition(":")[2], "body")
        K = Ellipse(vals[0], vals[0]) if cfg.get("body", "disk").startswith("disk") else Ellipse(*vals)
        return check_gauge_relation(K, **kw)
    if prop == "capbounds":
        return cap_sandwich_check(int(cfg.get("samples", 200)), int(cfg.get("seed", 0)))
    if prop == "uniformbound":
        psi = _fn(cfg["fn"])
        return uniform_bound_check(psi, parse_grid(cfg.get("grid", "-2:2:81")), float(cfg.get("delta", 1e-4)))
    if prop == "finiteness":
        alpha = float(cfg["alpha"]) if "alpha" in cfg else None
        return finiteness_suite(_fn(cfg["fn"]), alpha=alpha)
    raise UsageError(f"unknown property {prop!r}")


def cmd_check(args):
    cfg = parse_config(args.config) if args.config else {}
    props = [args.property] if args.property else [p.strip() for p in cfg.get("property", "").split(",") if p]
    if not props:
        raise UsageError("no property given (use --property or property= in the config)")
    try:
        reports = [_check_one(p, cfg, args) for p in props]
    except KeyError as exc:
        raise UsageError(f"config is missing key {exc}") from None
    for r in reports:
        r.config = {**r.config, **cfg}
    ok = all(r.passed for r in reports)
    out = [r.to_dict() for r in reports]
    return (out[0] if len(out) == 1 else {"reports": out, "config": cfg}), ok


def cmd_rolling(args):
    psi = _fn(args.fn)
    x = _floats(args.point, "point")
    if len(x) != psi.dim:
        raise UsageError("point dimension does not match the function")
    r = rolling_function(psi, x if psi.dim > 1 else x[0], tol=args.tol)
    return {"rolling_radius": r, "config": {"fn": args.fn, "point": x, "tol": args.tol}}, True


# --------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floatlab", description="Floating functions and affine surface area.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fn=True):
        if fn:
            sp.add_argument("--fn", required=True, help="function in the mini-language, e.g. 'quad(0.5)'")
        sp.add_argument("--abs-tol", type=float, default=1e-10)
        sp.add_argument("--rel-tol", type=float, default=1e-9)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", help="write here instead of stdout")

    sp = sub.add_parser("capvol", help="volume cut from the epigraph by y = <a,x> + b")
    common(sp)
    sp.add_argument("--slope", required=True)
    sp.add_argument("--offset", type=float, required=True)
    sp.set_defaults(run=cmd_capvol)

    sp = sub.add_parser("float", help="floating function values")
    common(sp)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--point")
    sp.add_argument("--grid", help="lo:hi:count[,lo:hi:count]")
    sp.add_argument("--method", default="auto", choices=("auto", "chord", "centroid", "search"))
    sp.add_argument("--cut-rtol", type=float, default=1e-10)
    sp.set_defaults(run=cmd_float)

    sp = sub.add_parser("asa", help="affine surface area of exp(-psi)")
    common(sp)
    sp.add_argument("--alt", action="store_true", help="use the alternative functional")
    sp.set_defaults(run=cmd_asa)

    sp = sub.add_parser("asp", help="L_p affine surface area of a planar body")
    common(sp, fn=False)
    sp.add_argument("--body", required=True, help="disk:r or ellipse:rx,ry[,angle]")
    sp.add_argument("--p", type=float, required=True)
    sp.set_defaults(run=cmd_asp)

    sp = sub.add_parser("converge", help="convergence report along a delta ladder")
    common(sp)
    sp.add_argument("--mode", choices=("theorem", "proposition"), default="theorem")
    sp.add_argument("--ladder", help="max:min:count")
    sp.add_argument("--grid", help="-w:w:count (per axis)")
    sp.add_argument("--method", default="auto", choices=("auto", "chord", "centroid", "search"))
    sp.add_argument("--cut-rtol", type=float, default=1e-10)
    sp.set_defaults(run=cmd_converge)

    sp = sub.add_parser("check", help="run property checks")
    common(sp, fn=False)
    sp.add_argument("--property", choices=("invariance", "valuation", "isoperimetric", "gauge", "capbounds",
                                           "uniformbound", "finiteness"))
    sp.add_argument("--config", help="key=value file")
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("rolling", help="rolling function at a point")
    common(sp)
    sp.add_argument("--point", required=True)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(run=cmd_rolling)
    return p


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    return str(o)


def _render(result, fmt: str) -> str:
    payload, table = result[0], (result[2] if len(result) > 2 else None)
    if fmt == "csv":
        if table is not None:
            return table.to_csv()
        if hasattr(payload, "to_csv"):
            return payload.to_csv()
        flat = payload if isinstance(payload, dict) else {"value": payload}
        keys = [k for k, v in flat.items() if isinstance(v, (int, float, str, bool))]
        vals = [f"{flat[k]:.9g}" if isinstance(flat[k], float) else str(flat[k]) for k in keys]
        return ",".join(keys) + "\n" + ",".join(vals) + "\n"
    if hasattr(payload, "to_dict"):
        payload = payload.to_dict()
    return _json(payload)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"floatlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        sys.stdout.write(_json({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_NUMERIC
    text = _render(result, args.format)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if result[1] else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
