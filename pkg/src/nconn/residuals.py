"""Field-equation residuals on point sets and their summary statistics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .ansatz5d import Ansatz5D, KernelRicci, SourceSpec, kernel_ricci
from .deformations import einstein_mixed
from .expr import nodes as nd
from .expr.evaluate import Program
from .expr.nodes import Expr
from .geometry.connection import canonical_dconnection
from .geometry.metric import DMetric, NConnection, anholonomy

WORST_COUNT = 5


def ansatz_residual_exprs(a: Ansatz5D, s: SourceSpec, k: float = 1.0,
                          kernel: Optional[KernelRicci] = None) -> dict:
    """Ordered name -> residual expression for the 5D ansatz.

    Diagonal entries G^a_a - k Y^a_a first, then R_{4i}, R_{5i} and the
    remaining off-diagonal mixed Einstein entries.
    """
    kr = kernel_ricci(a) if kernel is None else kernel
    G, Ric = kr.mixed_einstein, kr.ricci
    Y = s.mixed()
    out = {}
    for r in range(5):
        out[G.label((r, r))] = nd.sub(G.data[r, r], nd.mul(k, Y[r]))
    for row in (3, 4):
        for i in range(3):
            out[f"R_{row + 1}{i + 1}"] = Ric.data[row, i]
    for r in range(5):
        for c in range(5):
            if r != c:
                out[G.label((r, c))] = G.data[r, c]
    return out


def model_residual_exprs(g: DMetric, N: NConnection, sources: Optional[Mapping] = None,
                         k: float = 1.0) -> dict:
    """G^a_b - k Y^a_b for the canonical d-connection of (g, N).

    ``sources`` maps 0-based (a, b) pairs to expressions; missing entries are 0.
    """
    sources = sources or {}
    W = anholonomy(N)
    G = einstein_mixed(canonical_dconnection(g, N), g, N, W)
    out = {}
    for idx in G.indices():
        y = sources.get(idx)
        out[G.label(idx)] = G.data[idx] if y is None else nd.sub(G.data[idx], nd.mul(k, y))
    return out


@dataclass
class EquationStats:
    name: str
    max: float
    mean: float
    rms: float
    worst: list              # [(point index, residual)] by decreasing |residual|
    domain_errors: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.domain_errors == 0 and self.max <= self.tolerance


@dataclass
class ResidualEvaluation:
    names: list
    values: np.ndarray       # (len(names), npts); NaN where undefined
    stats: list
    npoints: int
    bad_points: np.ndarray   # bool (npts,): undefined for some equation
    errors: dict = field(default_factory=dict)   # name -> [(point, reason)]

    @property
    def domain_fraction(self) -> float:
        return float(self.bad_points.mean()) if self.npoints else 0.0

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.stats)

    def failing(self) -> list:
        return [s.name for s in self.stats if not s.passed]

    def by_name(self) -> dict:
        return {s.name: s for s in self.stats}


def _stats(name: str, row: np.ndarray, tol: float, nworst: int) -> EquationStats:
    finite = np.isfinite(row)
    a = np.abs(row[finite])
    if a.size == 0:
        return EquationStats(name, 0.0, 0.0, 0.0, [], int((~finite).sum()), tol)
    idx = np.nonzero(finite)[0]
    # largest |r| first, ties broken by point index
    order = np.lexsort((idx, -a))[:nworst]
    worst = [(int(idx[o]), float(row[idx[o]])) for o in order]
    return EquationStats(name, float(a.max()), float(a.mean()), float(np.sqrt(np.mean(a * a))),
                         worst, int((~finite).sum()), tol)


def evaluate_residuals(exprs: Mapping[str, Expr], env: Mapping[str, object],
                       tol: float = 1e-6, npts: Optional[int] = None, jobs=None,
                       nworst: int = WORST_COUNT) -> ResidualEvaluation:
    names = list(exprs)
    res = Program([exprs[n] for n in names]).evaluate(env, npts=npts, jobs=jobs)
    vals = res.values
    n = vals.shape[1]
    stats = [_stats(nm, vals[r], tol, nworst) for r, nm in enumerate(names)]
    errors = {names[r]: [(p, reason) for p, _node, reason in errs]
              for r, errs in sorted(res.errors.items())}
    bad = res.bad.any(axis=0) if len(names) else np.zeros(n, bool)
    return ResidualEvaluation(names, vals, stats, n, bad, errors)
