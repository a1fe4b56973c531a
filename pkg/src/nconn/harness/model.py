"""Model files: schema validation and expression parsing with path-tagged errors."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import jsonschema

from ..ansatz5d import Ansatz5D, AnsatzError, SourceSpec
from ..expr import nodes as nd
from ..expr.nodes import Expr
from ..expr.parser import ExpressionError, ParseError, UnknownIdentifierError, parse
from ..geometry.chart import SplitChart, five_d_chart
from ..geometry.metric import DMetric, NConnection
from ..solver.bundle import SolveRequest

FORMAT = "nconn-model/1"

TOLERANCES = {
    "residual": 1e-6,         # field-equation residuals
    "ansatz": 1e-8,           # closed-form vs kernel, relative
    "zero": 1e-10,            # zero-pattern components, absolute
    "structure": 1e-9,        # Einstein block structure, absolute
    "lc": 1e-10,              # canonical vs Levi-Civita Einstein tensors
    "relaxation": 1e-10,      # conformal relaxation residual
    "domain_fraction": 0.01,  # tolerated share of undefined grid points
}


class InputError(Exception):
    """Invalid model or command-line input (exit code 2)."""

    def __init__(self, kind: str, message: str, path: str = "", offset: Optional[int] = None):
        self.kind, self.path, self.offset = kind, path, offset
        super().__init__(message)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "message": str(self), "path": self.path}
        if self.offset is not None:
            out["offset"] = self.offset
        return out


def schema() -> dict:
    text = resources.files("nconn.harness").joinpath("model.schema.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class Model:
    raw: dict
    name: str
    chart: SplitChart
    params: dict
    metric: Optional[DMetric] = None
    nconnection: Optional[NConnection] = None
    ansatz: Optional[Ansatz5D] = None
    variant: str = "corrected"
    sources: Optional[SourceSpec] = None
    mixed_sources: dict = field(default_factory=dict)   # 0-based (a, b) -> Expr
    coupling: float = 1.0
    solve: Optional[SolveRequest] = None
    conformal: Optional[dict] = None    # boundary, box, shape for relaxation
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    seed: int = 0
    expressions: int = 0

    @property
    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def geometry(self) -> tuple[DMetric, NConnection]:
        if self.metric is not None:
            return self.metric, self.nconnection
        if self.ansatz is not None:
            from ..ansatz5d import build

            return build(self.ansatz)
        raise InputError("missing_section", "model has neither a metric nor an ansatz section")


class _Parser:
    def __init__(self, chart: SplitChart):
        self.chart = chart
        self.count = 0

    def __call__(self, text: str, path: str) -> Expr:
        try:
            e = parse(text, self.chart)
        except UnknownIdentifierError as exc:
            raise InputError("unknown_identifier", f"{path}: {exc}", path, exc.offset) from None
        except ParseError as exc:
            raise InputError("parse_error", f"{path}: {exc}", path, exc.offset) from None
        except ExpressionError as exc:
            raise InputError("parse_error", f"{path}: {exc}", path) from None
        self.count += 1
        return e

    def many(self, items, path: str) -> tuple:
        return tuple(self(s, f"{path}[{k}]") for k, s in enumerate(items))


def _block(P: _Parser, spec, k: int, path: str):
    if all(isinstance(x, str) for x in spec):
        if len(spec) != k:
            raise InputError("shape", f"{path}: expected {k} diagonal entries", path)
        diag = P.many(spec, path)
        return [[diag[r] if r == c else nd.ZERO for c in range(k)] for r in range(k)]
    if len(spec) != k or any(len(row) != k for row in spec):
        raise InputError("shape", f"{path}: expected a {k}x{k} matrix", path)
    return [list(P.many(row, f"{path}[{r}]")) for r, row in enumerate(spec)]


def load_model(source: Union[str, Path, dict]) -> Model:
    """Read, validate and parse a model (file path or already-decoded dict)."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError("io", f"model file not found: {source}") from None
        except json.JSONDecodeError as exc:
            raise InputError("json", f"invalid JSON: {exc}") from None
    validator = jsonschema.Draft7Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        raise InputError("schema", f"{path or '<root>'}: {err.message}", path)
    return _build(raw)


def _build(raw: dict) -> Model:
    chart_spec = raw.get("chart", {})
    params = dict(sorted(chart_spec.get("params", {}).items()))
    five_d = "ansatz" in raw or "solve" in raw
    if five_d and "metric" in raw:
        raise InputError("conflict", "a model has either a metric or an ansatz/solve section")
    try:
        if five_d:
            g1 = raw.get("ansatz", raw.get("solve", {})).get("g1", 1)
            chart = five_d_chart(tuple(params), g1)
            for key, want in (("horizontal", chart.h), ("vertical", chart.v)):
                if key in chart_spec and tuple(chart_spec[key]) != want:
                    raise InputError("chart", f"ansatz models use the chart {chart.coords}",
                                     f"chart.{key}")
        else:
            if "horizontal" not in chart_spec or "vertical" not in chart_spec:
                raise InputError("chart", "chart.horizontal and chart.vertical are required",
                                 "chart")
            chart = SplitChart(chart_spec["horizontal"], chart_spec["vertical"],
                               chart_spec.get("signature", ()), tuple(params))
    except ValueError as exc:
        raise InputError("chart", str(exc), "chart") from None
    P = _Parser(chart)
    m = Model(raw, raw.get("name", ""), chart, params, seed=int(raw.get("seed", 0)))
    tol = raw.get("tolerances", {})
    unknown = sorted(set(tol) - set(TOLERANCES))
    if unknown:
        raise InputError("tolerance", f"unknown tolerance names {unknown}", "tolerances")
    m.tolerances.update(tol)

    if "metric" in raw:
        g = _block(P, raw["metric"]["g"], chart.n, "metric.g")
        h = _block(P, raw["metric"]["h"], chart.m, "metric.h")
        try:
            m.metric = DMetric(chart, g, h)
        except ValueError as exc:
            raise InputError("metric", str(exc), "metric") from None
        rows = raw.get("nconnection")
        if rows is None:
            m.nconnection = NConnection.zero(chart)
        else:
            if len(rows) != chart.n or any(len(r) != chart.m for r in rows):
                raise InputError("shape", f"nconnection must be {chart.n}x{chart.m}", "nconnection")
            m.nconnection = NConnection(chart, [P.many(r, f"nconnection[{i}]")
                                                for i, r in enumerate(rows)])
    elif "nconnection" in raw:
        raise InputError("conflict", "nconnection needs a metric section", "nconnection")

    if "ansatz" in raw:
        a = raw["ansatz"]
        try:
            m.ansatz = Ansatz5D(P(a["g2"], "ansatz.g2"), P(a["g3"], "ansatz.g3"),
                                P(a["h4"], "ansatz.h4"), P(a["h5"], "ansatz.h5"),
                                P.many(a.get("w", ["0"] * 3), "ansatz.w"),
                                P.many(a.get("n", ["0"] * 3), "ansatz.n"), a.get("g1", 1), chart)
        except AnsatzError as exc:
            raise InputError("ansatz", str(exc), "ansatz") from None
        m.variant = a.get("variant", "corrected")

    src = raw.get("sources", {})
    m.coupling = float(src.get("coupling", 1.0))
    if five_d:
        try:
            m.sources = SourceSpec(P(src.get("upsilon2", "0"), "sources.upsilon2"),
                                   P(src.get("upsilon4", "0"), "sources.upsilon4"))
        except AnsatzError as exc:
            raise InputError("sources", str(exc), "sources") from None
        if "mixed" in src:
            raise InputError("sources", "ansatz models take upsilon2/upsilon4, not mixed",
                             "sources.mixed")
    else:
        for key, text in sorted(src.get("mixed", {}).items()):
            r, c = (int(x) - 1 for x in key.split(","))
            if r >= chart.dim or c >= chart.dim:
                raise InputError("sources", f"index {key} outside the chart", f"sources.mixed.{key}")
            m.mixed_sources[(r, c)] = P(text, f"sources.mixed.{key}")
        if "upsilon2" in src or "upsilon4" in src:
            raise InputError("sources", "upsilon2/upsilon4 need an ansatz model", "sources")

    if "solve" in raw:
        m.solve, m.conformal = _solve_request(P, raw["solve"], m.sources)
    m.expressions = P.count
    return m


def _solve_request(P: _Parser, s: dict, sources: SourceSpec):
    hs, vs = s["h_sector"], s["v_sector"]
    mode = hs.get("mode", "verify")
    g2 = P(hs["g2"], "solve.h_sector.g2")
    g3 = P(hs["g3"], "solve.h_sector.g3") if "g3" in hs else None
    if mode == "verify" and g3 is None:
        raise InputError("solve", "verify mode needs g3", "solve.h_sector")
    conformal = None
    if mode == "conformal" and "boundary" in hs:
        if "box" not in hs:
            raise InputError("solve", "relaxation needs a box", "solve.h_sector.box")
        conformal = {"boundary": P(hs["boundary"], "solve.h_sector.boundary"),
                     "box": (tuple(hs["box"]["x2"]), tuple(hs["box"]["x3"])),
                     "shape": tuple(hs.get("shape", (33, 33)))}
    opt = {k: P(vs[k], f"solve.v_sector.{k}") for k in ("h4", "h5", "h5_init", "dh5_init")
           if k in vs}
    if "h4" not in opt and "h5" not in opt:
        raise InputError("solve", "v_sector needs h4 or h5", "solve.v_sector")
    if "h4" in opt and "h5" not in opt and not {"h5_init", "dh5_init"} <= set(opt):
        raise InputError("solve", "ODE branch needs h5_init and dh5_init", "solve.v_sector")
    req = SolveRequest(
        g2=g2, g3=g3, conformal=(mode == "conformal"),
        h4=opt.get("h4"), h5=opt.get("h5"),
        upsilon2=sources.upsilon2, upsilon4=sources.upsilon4,
        h0=P(vs.get("h0", "1"), "solve.v_sector.h0"),
        n1=P.many(s.get("n1", ["0"] * 3), "solve.n1"),
        n2=P.many(s.get("n2", ["1"] * 3), "solve.n2"),
        w=P.many(s["w"], "solve.w") if "w" in s else None,
        v0=float(vs.get("v0", 0.0)),
        h5_init=opt.get("h5_init"), dh5_init=opt.get("dh5_init"),
        g1=s.get("g1", 1),
    )
    return req, conformal


def parse_tolerance_overrides(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, val = item.partition("=")
        if not sep or name not in TOLERANCES:
            raise InputError("tolerance", f"bad --tol {item!r}; names: {sorted(TOLERANCES)}")
        try:
            out[name] = float(val)
        except ValueError:
            raise InputError("tolerance", f"bad --tol value {val!r}") from None
        if not out[name] >= 0:
            raise InputError("tolerance", f"tolerance {name} must be >= 0")
    return out
