"""Command-line front end.

Subcommands: ``verify``, ``reduce``, ``optimize``, ``merge`` and ``catalog``.
Models come either from a JSON file (``--model``) or from inline flags;
designs and reports are JSON.  Exit codes: 0 success, 1 usage or malformed
input, 2 regularity violation, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .catalog import FAMILIES, LAYOUTS, REFERENCE, instantiate
from .design import Design, merge_designs
from .errors import (ChebyshevViolation, CriterionError, DesignError, GarzaError,
                     ParameterError, RangeError, SolverError)
from .optimizer import EQUIVALENCE_GRID, Criterion, optimize
from .psi import DEFAULT_GRID, classify_case
from .reduction import certify, effective_interval, reduce_design

SCHEMA = "garza/1"
EXIT_OK, EXIT_USAGE, EXIT_REGULARITY, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- file formats ---------------------------------------------------------
def design_to_json(design: Design) -> dict:
    return {"schema": SCHEMA, "space": design.space,
            "points": [{"loc": c, "w": w} for c, w in design.points()]}


def design_from_json(doc: dict) -> Design:
    _check_schema(doc)
    try:
        pts = doc["points"]
        loc = [float(p["loc"]) for p in pts]
        w = [float(p["w"]) for p in pts]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed design document: {exc}") from None
    return Design.build(loc, w, doc.get("space", "x"))


def model_from_json(doc: dict):
    _check_schema(doc)
    try:
        return instantiate(doc["family"], doc["theta"], doc["region"], doc.get("options"),
                           doc.get("noise_scale", 1.0))
    except KeyError as exc:
        raise UsageError(f"model document lacks {exc}") from None


def _check_schema(doc):
    if not isinstance(doc, dict):
        raise UsageError("expected a JSON object")
    tag = doc.get("schema", SCHEMA)
    if tag != SCHEMA:
        raise UsageError(f"unsupported schema {tag!r}, expected {SCHEMA!r}")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def write_json(doc, path):
    # json writes floats via repr, which round-trips every finite double
    text = json.dumps(doc, indent=2, allow_nan=False)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def report_to_json(report, model) -> dict:
    return {
        "schema": SCHEMA,
        "model": model.describe(),
        "case": report.case.label,
        "max_support": report.case.max_support,
        "pinned": list(report.case.pinned),
        "input": design_to_json(report.input),
        "output": design_to_json(report.output),
        "moment_residuals": [float(r) for r in report.moment_residuals],
        "top_moment_gain": report.top_moment_gain,
        "dominance_margin": report.dominance_margin,
        "dominance_tol": report.dominance_tol,
        "dominates": bool(report.dominates),
        "iterations": report.iterations,
    }


# -- helpers --------------------------------------------------------------
def grid_size(args) -> int:
    if getattr(args, "grid", None):
        return args.grid
    env = os.environ.get("GARZA_GRID")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"GARZA_GRID must be an integer, got {env!r}") from None
        if value < 2:
            raise UsageError("GARZA_GRID must be at least 2")
        return value
    return DEFAULT_GRID


def _parse_option(text):
    key, sep, raw = text.partition("=")
    if not sep:
        raise UsageError(f"option {text!r} must look like key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def load_model(args):
    inline = [args.family, args.theta, args.region, args.option]
    sources = bool(args.model) + bool(args.reference) + any(v is not None for v in inline)
    if sources > 1:
        raise UsageError("give exactly one of --model, --reference or inline model flags")
    if args.model:
        return model_from_json(read_json(args.model))
    if args.reference:
        spec = dict(REFERENCE[args.reference])
        return instantiate(**spec)
    if not (args.family and args.theta is not None and args.region is not None):
        raise UsageError("give --model FILE, --reference NAME or --family/--theta/--region")
    opts = dict(_parse_option(o) for o in args.option or [])
    return instantiate(args.family, args.theta, args.region, opts)


def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="JSON model file")
    g.add_argument("--reference", choices=sorted(REFERENCE), help="built-in reference model")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--theta", type=float, nargs="+")
    g.add_argument("--region", type=float, nargs=2, metavar=("L", "U"))
    g.add_argument("--option", action="append", metavar="KEY=VALUE",
                   help="family option, repeatable (values parsed as JSON when possible)")
    p.add_argument("--grid", type=int, help="sign-certification grid size "
                   "(default: GARZA_GRID or %d)" % DEFAULT_GRID)


# -- commands -------------------------------------------------------------
def cmd_verify(args):
    model = load_model(args)
    system = model.psi
    if not system.bounded:
        print("unbounded c-region; certifying on the region's finite part is impossible "
              "without data, pass a bounded --region", file=sys.stderr)
        return EXIT_USAGE
    cert = certify(system, grid_size(args))
    case = classify_case(cert.signs, system.k)
    print(f"family={model.family} k={system.k} c-interval=[{cert.interval[0]:.12g}, "
          f"{cert.interval[1]:.12g}] grid={cert.grid_size}")
    for l, (s, m) in enumerate(zip(cert.signs, cert.min_abs), start=1):
        print(f"  f_{l},{l}: sign={'+' if s > 0 else '-'} min|f|={m:.3g}")
    pinned = ",".join(case.pinned) or "none"
    print(f"F={'+' if cert.F_sign > 0 else '-'}")
    print(f"case={case.label}, max_support={case.max_support}, pinned={pinned}")
    x_pins = ",".join(f"{model.x_endpoint(p):.12g}" for p in case.pinned) or "none"
    print(f"pinned x-endpoints={x_pins}")
    return EXIT_OK


def _reduce_and_report(model, design, args):
    report = reduce_design(model, design, grid_size(args))
    write_json(report_to_json(report, model), args.out)
    status = "dominates" if report.dominates else "FAILS dominance"
    print(f"case={report.case.label} support {report.input.size} -> {report.output.size}, "
          f"margin={report.dominance_margin:.3g} ({status})", file=sys.stderr)
    return EXIT_OK if report.dominates else EXIT_SOLVER


def cmd_reduce(args):
    model = load_model(args)
    design = design_from_json(read_json(args.design))
    return _reduce_and_report(model, design, args)


def cmd_merge(args):
    model = load_model(args)
    first = design_from_json(read_json(args.first))
    second = design_from_json(read_json(args.second))
    merged = merge_designs(first, args.weight, second)
    if args.merged_out:
        write_json(design_to_json(merged), args.merged_out)
    return _reduce_and_report(model, merged, args)


def cmd_optimize(args):
    model = load_model(args)
    criterion = Criterion(args.criterion, vector=tuple(args.vector) if args.vector else None,
                          exponent=args.exponent)
    res = optimize(model, criterion, n_starts=args.starts, seed=args.seed,
                   grid=args.eq_grid, grid_size=grid_size(args))
    eq = res.equivalence
    doc = {
        "schema": SCHEMA,
        "model": model.describe(),
        "criterion": criterion.label,
        "value": res.value,
        "case": res.case_label,
        "design": design_to_json(res.design),
        "equivalence": {"max_violation": eq.max_violation, "location": eq.location,
                        "grid": int(eq.grid.size), "optimal": bool(eq.optimal)},
    }
    write_json(doc, args.out)
    print(f"{criterion.label}-value={res.value:.10g} max violation={eq.max_violation:.3g} "
          f"at x={eq.location:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_catalog(args):
    if args.json:
        write_json({"schema": SCHEMA, "families": LAYOUTS,
                    "reference": {k: {kk: (list(vv) if isinstance(vv, tuple) else vv)
                                      for kk, vv in v.items()} for k, v in REFERENCE.items()}},
                   None)
        return EXIT_OK
    for fam in FAMILIES:
        print(f"{fam}\n    {LAYOUTS[fam]}")
    print("\nreference instances:")
    for name, spec in REFERENCE.items():
        opts = spec.get("options", {})
        print(f"  {name:24s} theta={list(spec['theta'])} region={list(spec['x_region'])}"
              + (f" options={opts}" if opts else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="garza", description="Loewner-dominating design reduction")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="certify diagonal signs and print the reduction case")
    _add_model_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="reduce a design to minimal support")
    _add_model_args(p)
    p.add_argument("--design", required=True, help="JSON design file")
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("optimize", help="optimal design on the minimal support class")
    _add_model_args(p)
    p.add_argument("--criterion", default="D", choices=("D", "A", "E", "c", "Phi"))
    p.add_argument("--vector", type=float, nargs="+", help="c-criterion coefficients")
    p.add_argument("--exponent", type=float, help="Phi criterion exponent q < 1")
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eq-grid", type=int, default=EQUIVALENCE_GRID)
    p.add_argument("--out", help="result file (default stdout)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("merge", help="merge two stages, then reduce the union")
    _add_model_args(p)
    p.add_argument("--first", required=True, help="first-stage design file")
    p.add_argument("--second", required=True, help="second-stage design file")
    p.add_argument("--weight", type=float, required=True, help="share of the first stage")
    p.add_argument("--merged-out", help="also write the merged design here")
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("catalog", help="list model families and parameter layouts")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ChebyshevViolation as exc:
        where = "" if exc.location is None else f" (l={exc.index}, c~{exc.location:.6g})"
        print(f"regularity violation: {exc}{where}", file=sys.stderr)
        return EXIT_REGULARITY
    except (SolverError, CriterionError) as exc:
        extra = "" if getattr(exc, "residual", None) is None else \
            f" best residual {exc.residual:.3g}"
        print(f"solver failure: {exc}{extra}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, ParameterError, RangeError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GarzaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
