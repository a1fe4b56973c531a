"""``nconn`` command-line entry point.

Exit codes: 0 pass, 1 tolerance failure, 2 input error, 3 numeric domain
failure (undefined values on more than the tolerated share of points).
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import __version__
from ..ansatz5d import VARIANTS, closed_form_vs_kernel, einstein_structure, kernel_ricci
from ..compare import nanmax
from ..deformations import lc_equivalence
from ..expr.evaluate import Program
from ..expr.parser import to_string
from ..geometry.chart import Point
from ..geometry.fields import ComponentField, zeros
from ..residuals import ansatz_residual_exprs, evaluate_residuals, model_residual_exprs
from ..solver import (
    InconsistencyError, PreconditionError, QuadratureError, RayError, RelaxationError,
    construct, solve_conformal,
)
from . import components as comp
from .grid import Grid, build_grid
from .model import InputError, Model, load_model, parse_tolerance_overrides
from .report import REPORT_VERSION, canonical_json, csv_text, point_header, point_rows

EXIT_PASS, EXIT_TOLERANCE, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3
COMMANDS = ("check", "geometry", "ansatz-verify", "solve", "residuals", "lc-compare")


@dataclass
class Outcome:
    body: dict
    passed: bool
    bad_points: int = 0
    npoints: int = 0
    tables: dict = field(default_factory=dict)    # name -> (header, rows)


@dataclass
class Context:
    model: Model
    grid: Grid
    env: dict
    tol: dict
    jobs: Optional[int]

    def coords(self) -> dict:
        return {c: self.env[c] for c in self.model.chart.coords}

    def point(self, p: int) -> dict:
        return {c: float(np.asarray(self.env[c]).reshape(-1)[p]) for c in self.model.chart.coords}


# -- commands -----------------------------------------------------------------

def cmd_check(ctx: Context) -> Outcome:
    m = ctx.model
    sections = sorted(k for k in m.raw if k not in ("format", "name", "description"))
    return Outcome({"expressions": m.expressions, "chart": {"horizontal": list(m.chart.h),
                    "vertical": list(m.chart.v)}, "sections": sections}, True)


def cmd_geometry(ctx: Context) -> Outcome:
    m = ctx.model
    names = m.raw.get("components") or list(comp.DEFAULT)
    if m.raw.get("points"):
        try:
            pts = [Point(p).check(m.chart).coords for p in m.raw["points"]]
        except ValueError as exc:
            raise InputError("points", str(exc), "points") from None
        env = {c: np.array([float(p[c]) for p in pts]) for c in m.chart.coords}
        env.update(m.params)
    else:
        env = ctx.env
    labels, roots, exprs = [], [], {}
    for f in comp.compute(m, names):
        for idx, e in f.items(nonzero=True):
            lab = f.label(idx)
            labels.append(lab)
            roots.append(e)
            exprs[lab] = to_string(e)
    res = Program(roots).evaluate(env, jobs=ctx.jobs)
    npts = res.values.shape[1]
    coords = {c: np.broadcast_to(np.asarray(env[c], dtype=float), (npts,)) for c in m.chart.coords}
    dump = {lab: {"expr": exprs[lab], "values": res.values[r]} for r, lab in enumerate(labels)}
    body = {"requested": names, "points": coords, "components": dump}
    bad = int(res.bad.any(axis=0).sum()) if roots else 0
    table = (point_header(coords), point_rows(labels, res.values, coords))
    return Outcome(body, True, bad, npts, {"components": table})


def cmd_ansatz_verify(ctx: Context) -> Outcome:
    m = ctx.model
    a = _need(m.ansatz, "ansatz")
    k = kernel_ricci(a)
    variants = {}
    skipped = npts = 0
    for v in VARIANTS:
        r = closed_form_vs_kernel(a, ctx.env, v, ctx.tol["ansatz"], ctx.tol["zero"], k, ctx.jobs)
        skipped, npts = len(r.skipped_points), r.points
        variants[v] = {"max_relative": r.max_relative, "zero_pattern": r.zero_pattern,
                       "worst_relative": r.worst, "worst_zero": r.worst_zero,
                       "failing": r.failing(), "passed": r.ok}
    struct = einstein_structure(k)
    vals = Program(list(struct.values())).evaluate(ctx.env, jobs=ctx.jobs).values
    structure = {name: nanmax(np.abs(vals[r])) for r, name in enumerate(struct)}
    struct_ok = all(x <= ctx.tol["structure"] for x in structure.values())
    body = {"variant": m.variant, "variants": variants, "structure": structure,
            "structure_passed": struct_ok}
    rows = [[v, q, val] for v in VARIANTS for q, val in sorted(variants[v]["max_relative"].items())]
    table = (["variant", "quantity", "max_relative"], rows)
    return Outcome(body, variants[m.variant]["passed"] and struct_ok, skipped, npts,
                   {"ansatz": table})


def cmd_residuals(ctx: Context) -> Outcome:
    m = ctx.model
    if m.ansatz is not None:
        exprs = ansatz_residual_exprs(m.ansatz, m.sources, m.coupling)
    else:
        g, N = m.geometry()
        exprs = model_residual_exprs(g, N, m.mixed_sources, m.coupling)
    ev = evaluate_residuals(exprs, ctx.env, ctx.tol["residual"], jobs=ctx.jobs)
    body = {"equations": _equations(ctx, ev), "failing": ev.failing()}
    table = (point_header(ctx.coords()), point_rows(ev.names, ev.values, ctx.coords()))
    return Outcome(body, ev.passed, int(ev.bad_points.sum()), ev.npoints, {"residuals": table})


def cmd_lc_compare(ctx: Context) -> Outcome:
    m = ctx.model
    g, N = m.geometry()
    src = None
    if m.mixed_sources:
        data = zeros((m.chart.dim, m.chart.dim))
        for (r, c), e in m.mixed_sources.items():
            data[r, c] = m.coupling * e
        src = ComponentField("Y", m.chart, ("fu", "fd"), data)
    r = lc_equivalence(g, N, ctx.env, tol=ctx.tol["lc"], sources=src, jobs=ctx.jobs)
    body = {"max_difference": r.max_difference, "per_component": r.per_component,
            "source_mismatch": r.source_mismatch}
    passed = r.max_difference <= ctx.tol["lc"] and (
        r.source_mismatch is None or r.source_mismatch <= ctx.tol["lc"])
    rows = [[k, v] for k, v in sorted(r.per_component.items())]
    return Outcome(body, passed, r.bad_points, r.points,
                   {"lc": (["component", "max_abs_difference"], rows)})


def cmd_solve(ctx: Context) -> Outcome:
    m = ctx.model
    req = _need(m.solve, "solve")
    b = construct(req, ctx.env, tol=ctx.tol["residual"], k=m.coupling, jobs=ctx.jobs)
    body: dict = {"status": b.status, "provenance": b.provenance,
                  "functions": {k: to_string(e) for k, e in b.functions().items()},
                  "constants": {k: to_string(e) for k, e in b.constants.items()},
                  "sector_checks": b.sector_checks, "notes": b.notes}
    tables = {}
    passed = b.verified
    bad = npts = 0
    if b.report is not None:
        body["equations"] = _equations(ctx, b.report)
        bad, npts = int(b.report.bad_points.sum()), b.report.npoints
        tables["residuals"] = (point_header(ctx.coords()),
                               point_rows(b.report.names, b.report.values, ctx.coords()))
    else:
        # tabulated pieces: the sector checks are the declared criteria
        passed = all(np.isfinite(v) and v <= ctx.tol["residual"] for v in b.sector_checks.values())
    if "h5" in b.tables:
        t = b.tables["h5"]
        body["tables"] = {"h5": {"v": t.v, "rays": t.rays, "h5": t.h5, "dh5": t.dh5,
                                 "failures": {str(k): v for k, v in sorted(t.failures.items())}}}
        bad = max(bad, len(t.failures) * len(t.v))
        npts = max(npts, t.h5.size)
    if "n" in b.tables:
        t = b.tables["n"]
        body.setdefault("tables", {})["n"] = {"v": t.v, "rays": t.rays, "integral": t.values,
                                              "error": t.error}
    if m.conformal is not None:
        c = m.conformal
        sol = solve_conformal(req.upsilon4, c["boundary"], c["box"][0], c["box"][1],
                              c["shape"], tol=ctx.tol["relaxation"])
        body["conformal"] = {"x2": sol.x2, "x3": sol.x3, "psi": sol.psi,
                             "residual": sol.residual, "iterations": sol.iterations}
    return Outcome(body, passed, bad, npts, tables)


HANDLERS: dict[str, Callable[[Context], Outcome]] = {
    "check": cmd_check,
    "geometry": cmd_geometry,
    "ansatz-verify": cmd_ansatz_verify,
    "solve": cmd_solve,
    "residuals": cmd_residuals,
    "lc-compare": cmd_lc_compare,
}


def _need(x, section: str):
    if x is None:
        raise InputError("missing_section", f"this command needs a {section!r} section", section)
    return x


def _equations(ctx: Context, ev) -> dict:
    out = {}
    for s in ev.stats:
        out[s.name] = {"max": s.max, "mean": s.mean, "rms": s.rms,
                       "domain_errors": s.domain_errors, "passed": s.passed,
                       "worst": [{"point": p, "coords": ctx.point(p), "value": v}
                                 for p, v in s.worst]}
    return out


# -- driver -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nconn", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--grid", default=None,
                   help="grid override, e.g. 'x2=-1:1:17,v=0.5:1.5,x1=0' or 'random=200'")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VAL",
                   help="tolerance override (repeatable)")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker threads (default: NCONN_JOBS or all cores)")
    p.add_argument("--version", action="version", version=f"nconn {__version__}")
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    report = {"tool": "nconn", "version": __version__, "report_version": REPORT_VERSION,
              "command": args.command}
    try:
        model = load_model(args.model)
        tol = dict(model.tolerances)
        tol.update(parse_tolerance_overrides(args.tol))
        seed = model.seed if args.seed is None else args.seed
        grid = build_grid(model.chart, model.raw.get("grid"), args.grid, seed)
        ctx = Context(model, grid, grid.env(model.params), tol, args.jobs)
        report.update(model=model.name, model_sha256=model.digest, seed=seed,
                      tolerances=tol, grid=grid.describe())
        outcome = HANDLERS[args.command](ctx)
    except InputError as exc:
        return _fail(stderr, EXIT_INPUT, exc.as_dict())
    except PreconditionError as exc:
        return _fail(stderr, EXIT_INPUT, {"kind": "precondition", "message": str(exc)})
    except (InconsistencyError, RelaxationError) as exc:
        return _fail(stderr, EXIT_TOLERANCE, {"kind": type(exc).__name__, "message": str(exc)})
    except (RayError, QuadratureError) as exc:
        return _fail(stderr, EXIT_DOMAIN, {"kind": type(exc).__name__, "message": str(exc)})

    frac = outcome.bad_points / outcome.npoints if outcome.npoints else 0.0
    domain_ok = frac <= tol["domain_fraction"]
    code = EXIT_PASS if outcome.passed and domain_ok else (
        EXIT_DOMAIN if not domain_ok else EXIT_TOLERANCE)
    report.update(outcome.body)
    report["domain"] = {"points": outcome.npoints, "bad_points": outcome.bad_points,
                        "fraction": frac, "threshold": tol["domain_fraction"], "passed": domain_ok}
    report["passed"] = code == EXIT_PASS
    report["exit_code"] = code
    text = canonical_json(report)
    tables = {k: csv_text(h, rows) for k, (h, rows) in outcome.tables.items()} \
        if args.output == "csv" else {}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text, encoding="utf-8")
        for name, body in tables.items():
            (out / f"{name}.csv").write_text(body, encoding="utf-8")
        timing = {"command": args.command, "runtime_seconds": time.perf_counter() - t0}
        (out / "timing.json").write_text(canonical_json(timing), encoding="utf-8")
    elif args.output == "csv":
        for body in tables.values():
            stdout.write(body)
    else:
        stdout.write(text)
    return code


def _fail(stream, code: int, info: dict) -> int:
    stream.write(canonical_json({"error": info, "exit_code": code}))
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
