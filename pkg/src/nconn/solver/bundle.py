"""Solution bundles: constructed ansatz functions with provenance and verification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..ansatz5d import Ansatz5D, SourceSpec
from ..compare import nanmax
from ..expr import nodes as nd
from ..expr.evaluate import Program
from ..expr.nodes import Expr
from ..residuals import ResidualEvaluation, ansatz_residual_exprs, evaluate_residuals
from .hsector import h_sector_residual_expr
from .offdiag import solve_n, solve_w
from .vsector import PreconditionError, solve_v_sector

PROVENANCE_TAGS = ("user-given", "closed-form", "ODE-integrated", "quadrature")
FUNCTIONS = ("g2", "g3", "h4", "h5", "w1", "w2", "w3", "n1", "n2", "n3")
VERIFIED, UNVERIFIED = "verified", "unverified"


@dataclass
class SolutionBundle:
    """Ansatz functions, their provenance and the attached verification.

    ``ansatz`` is None when a function exists only as a sampled table
    (``tables``); such bundles cannot be substituted into the Einstein
    tensor and stay unverified, with the sector checks reported instead.
    """

    ansatz: Optional[Ansatz5D]
    sources: SourceSpec
    provenance: dict
    constants: dict
    tables: dict = field(default_factory=dict)
    status: str = UNVERIFIED
    report: Optional[ResidualEvaluation] = None
    sector_checks: dict = field(default_factory=dict)   # name -> max |residual|
    notes: list = field(default_factory=list)

    def __post_init__(self):
        missing = [f for f in FUNCTIONS if f not in self.provenance]
        if missing:
            raise ValueError(f"no provenance for {missing}")
        bad = {k: v for k, v in self.provenance.items() if v not in PROVENANCE_TAGS}
        if bad:
            raise ValueError(f"unknown provenance tags {bad}")

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    def functions(self) -> dict:
        if self.ansatz is None:
            return {}
        a = self.ansatz
        out = {"g2": a.g2, "g3": a.g3, "h4": a.h4, "h5": a.h5}
        for i in range(3):
            out[f"w{i + 1}"] = a.w[i]
            out[f"n{i + 1}"] = a.n[i]
        return out


def assemble(ansatz: Optional[Ansatz5D], sources: SourceSpec, provenance: Mapping[str, str],
             constants: Mapping[str, Expr], env: Mapping[str, object], tol: float = 1e-6,
             k: float = 1.0, tables: Optional[Mapping] = None,
             sector_checks: Optional[Mapping[str, float]] = None,
             jobs=None) -> SolutionBundle:
    """Build the bundle and run the full Einstein residual grid on ``env``."""
    b = SolutionBundle(ansatz, sources, dict(provenance), dict(constants), dict(tables or {}),
                       sector_checks=dict(sector_checks or {}))
    if ansatz is None or b.tables:
        b.notes.append("tabulated functions: full Einstein residuals need closed forms; "
                       "sector checks only")
        return b
    b.report = evaluate_residuals(ansatz_residual_exprs(ansatz, sources, k), env, tol, jobs=jobs)
    sectors_ok = all(np.isfinite(v) and v <= tol for v in b.sector_checks.values())
    if b.report.passed and sectors_ok:
        b.status = VERIFIED
    else:
        failing = b.report.failing() + [s for s, v in b.sector_checks.items()
                                        if not (np.isfinite(v) and v <= tol)]
        b.notes.append("failing: " + ", ".join(failing))
    return b


@dataclass
class SolveRequest:
    """Free data and construction choices.

    h-sector: ``g3`` given (verify) or ``conformal`` (g3 := g2).
    v-sector: give ``h5`` (vacuum closed form for h4) or ``h4`` with
    ``h5_init``/``dh5_init`` (ODE), or both (verify only).
    """

    g2: Expr
    g3: Optional[Expr] = None
    conformal: bool = False
    h4: Optional[Expr] = None
    h5: Optional[Expr] = None
    upsilon2: Expr = nd.ZERO
    upsilon4: Expr = nd.ZERO
    h0: Expr = nd.ONE
    n1: tuple = (nd.ZERO,) * 3
    n2: tuple = (nd.ONE,) * 3
    w: Optional[tuple] = None
    v0: float = 0.0
    h5_init: Optional[Expr] = None
    dh5_init: Optional[Expr] = None
    g1: int = 1


def _split_rays(env: Mapping[str, object]):
    """Unique horizontal rays and sorted v samples of a point set."""
    names = sorted(k for k in env if k in ("x1", "x2", "x3"))
    cols = np.broadcast_arrays(*[np.asarray(env[k], dtype=float) for k in ["v"] + names])
    v = np.unique(cols[0])
    if not names:
        return v, {}
    stack = np.stack([c.reshape(-1) for c in cols[1:]], axis=1)
    rays = np.unique(stack, axis=0)
    return v, {k: rays[:, j] for j, k in enumerate(names)}


def construct(req: SolveRequest, env: Mapping[str, object], tol: float = 1e-6, k: float = 1.0,
              jobs=None) -> SolutionBundle:
    """Run the construction pipeline sector by sector and assemble the bundle."""
    prov: dict = {"g2": "user-given"}
    checks: dict = {}
    tables: dict = {}
    # h-sector
    if req.conformal:
        g3 = req.g2
        prov["g3"] = "closed-form"
    elif req.g3 is not None:
        g3 = req.g3
        prov["g3"] = "user-given"
    else:
        raise PreconditionError("h-sector needs g3 or conformal mode")
    hres = h_sector_residual_expr(req.g2, g3, req.upsilon4)
    checks["h-sector"] = nanmax(np.abs(Program([hres]).evaluate(env, jobs=jobs).values[0]),
                                default=0.0)
    # v-sector
    if req.h4 is not None and req.h5 is not None:
        h4, h5 = req.h4, req.h5
        prov.update(h4="user-given", h5="user-given")
    elif req.h5 is not None:
        vs = solve_v_sector(h5=req.h5, upsilon2=req.upsilon2, h0=req.h0)
        h4, h5 = vs.h4, vs.h5
        prov.update(vs.provenance)
    else:
        v_values, rays = _split_rays(env)
        vs = solve_v_sector(h4=req.h4, upsilon2=req.upsilon2, h5_init=req.h5_init,
                            dh5_init=req.dh5_init, v_values=v_values, rays=rays, v0=req.v0,
                            jobs=jobs)
        prov.update(vs.provenance)
        tables["h5"] = vs.table
        checks["v-sector rays failed"] = float(len(vs.table.failures))
        for i in range(3):
            prov[f"w{i + 1}"] = "user-given"
            prov[f"n{i + 1}"] = "user-given"
        return assemble(None, SourceSpec(req.upsilon2, req.upsilon4), prov,
                        _constants(req), env, tol, k, tables, checks, jobs)
    partial = Ansatz5D(req.g2, g3, h4, h5, g1=req.g1)
    # off-diagonal sectors
    ws = solve_w(partial, req.w, env=env)
    for i in range(3):
        prov[f"w{i + 1}"] = ws.provenance[i]
    v_values, rays = _split_rays(env)
    ns = solve_n(partial, req.n1, req.n2, v0=req.v0, v_values=v_values, rays=rays)
    for i in range(3):
        prov[f"n{i + 1}"] = ns.provenance[i]
    if ns.n is None:
        tables["n"] = ns.table
        return assemble(None, SourceSpec(req.upsilon2, req.upsilon4), prov,
                        _constants(req), env, tol, k, tables, checks, jobs)
    a = partial.replace(w=ws.w, n=ns.n)
    return assemble(a, SourceSpec(req.upsilon2, req.upsilon4), prov, _constants(req), env,
                    tol, k, tables, checks, jobs)


def _constants(req: SolveRequest) -> dict:
    out = {"h0": req.h0}
    for i in range(3):
        out[f"n1_{i + 1}"] = req.n1[i]
        out[f"n2_{i + 1}"] = req.n2[i]
    return out
