"""The five-dimensional off-diagonal ansatz.

Coordinates are (x1, x2, x3 | v, y5).  The adapted-frame metric is
diag(g1, g2, g3 | h4, h5) with N_i^4 = w_i and N_i^5 = n_i.  Derivative
shorthands used below: ``dot`` is d/dx2, ``prime`` d/dx3, ``star`` d/dv.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .compare import nanmax, relative_deviation
from .expr import nodes as nd
from .expr.calculus import diff
from .expr.evaluate import Program
from .expr.nodes import Expr
from .expr.parser import parse
from .expr.simplify import simplify
from .geometry.chart import SplitChart, five_d_chart
from .geometry.connection import canonical_dconnection
from .geometry.curvature import curvature, einstein, raise_first, ricci, scalar
from .geometry.fields import ComponentField
from .geometry.metric import DMetric, NConnection, anholonomy

VARIANTS = ("printed", "corrected")


class AnsatzError(ValueError):
    """Ansatz or source data violates a structural requirement."""


def dot(f: Expr) -> Expr:
    return diff(f, "x2")


def prime(f: Expr) -> Expr:
    return diff(f, "x3")


def star(f: Expr) -> Expr:
    return diff(f, "v")


@dataclass(frozen=True)
class Ansatz5D:
    g2: Expr
    g3: Expr
    h4: Expr
    h5: Expr
    w: tuple = (nd.ZERO, nd.ZERO, nd.ZERO)
    n: tuple = (nd.ZERO, nd.ZERO, nd.ZERO)
    g1: int = 1
    chart: SplitChart = field(default_factory=five_d_chart)

    def __post_init__(self):
        if self.g1 not in (1, -1):
            raise AnsatzError("g1 must be +1 or -1")
        if len(self.w) != 3 or len(self.n) != 3:
            raise AnsatzError("w and n need three components each")
        for name in ("g2", "g3"):
            e = getattr(self, name)
            if e.is_zero:
                raise AnsatzError(f"{name} must be nonzero")
            coords, _ = nd.free_names(e)
            if coords - {"x2", "x3"}:
                raise AnsatzError(f"{name} may depend on x2, x3 only (found {sorted(coords)})")
        for name in ("h4", "h5"):
            coords, _ = nd.free_names(getattr(self, name))
            if "y5" in coords:
                raise AnsatzError(f"{name} must not depend on y5")

    @classmethod
    def from_strings(cls, g2: str, g3: str, h4: str, h5: str,
                     w: Sequence[str] = ("0", "0", "0"), n: Sequence[str] = ("0", "0", "0"),
                     g1: int = 1, params: Sequence[str] = ()) -> "Ansatz5D":
        chart = five_d_chart(params, g1)

        def p(s):
            return parse(s, chart) if isinstance(s, str) else nd.as_expr(s)

        return cls(p(g2), p(g3), p(h4), p(h5), tuple(p(s) for s in w), tuple(p(s) for s in n),
                   g1, chart)

    def replace(self, **kw) -> "Ansatz5D":
        data = dict(g2=self.g2, g3=self.g3, h4=self.h4, h5=self.h5, w=self.w, n=self.n,
                    g1=self.g1, chart=self.chart)
        data.update(kw)
        return Ansatz5D(**data)


def build(a: Ansatz5D) -> tuple[DMetric, NConnection]:
    ch = a.chart
    g = DMetric.diagonal(ch, [nd.const(a.g1), a.g2, a.g3], [a.h4, a.h5])
    N = NConnection(ch, [[a.w[i], a.n[i]] for i in range(3)])
    return g, N


@dataclass
class ClosedFormRicci:
    R22: Expr
    R44: Expr
    alpha: tuple
    beta: Expr
    gamma: Expr
    R4: tuple  # R_{4i}, i = 1..3
    R5: tuple  # R_{5i}
    variant: str

    def named(self) -> dict:
        out = {"R^2_2": self.R22, "R^4_4": self.R44, "beta": self.beta, "gamma": self.gamma}
        for i in range(3):
            out[f"alpha_{i + 1}"] = self.alpha[i]
            out[f"R_4{i + 1}"] = self.R4[i]
            out[f"R_5{i + 1}"] = self.R5[i]
        return out


def log_sqrt_h45(a: Ansatz5D) -> Expr:
    """ln sqrt|h4 h5|."""
    return simplify(nd.ln(nd.sqrt(nd.absolute(a.h4 * a.h5))))


def h_sector_bracket(g2: Expr, g3: Expr) -> Expr:
    """g3.. - g2.g3./2g2 - (g3.)^2/2g3 + g2'' - g2'g3'/2g3 - (g2')^2/2g2."""
    return nd.total([
        dot(dot(g3)),
        nd.neg(dot(g2) * dot(g3) / (2 * g2)),
        nd.neg(nd.power(dot(g3), 2) / (2 * g3)),
        prime(prime(g2)),
        nd.neg(prime(g2) * prime(g3) / (2 * g3)),
        nd.neg(nd.power(prime(g2), 2) / (2 * g2)),
    ])


def ricci_closed_form(a: Ansatz5D, variant: str = "printed") -> ClosedFormRicci:
    """Closed-form Ricci components of the canonical d-connection.

    ``printed`` has R_{4i} = -(w_i beta + alpha_i)/2h5 and h4*/h4 in gamma;
    ``corrected`` has +w_i beta and h4*/(2 h4), which is what the generic
    kernel yields.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    g2, g3, h4, h5 = a.g2, a.g3, a.h4, a.h5
    R22 = simplify(nd.neg(h_sector_bracket(g2, g3) / (2 * g2 * g3)))
    L = log_sqrt_h45(a)
    h5s = star(h5)
    beta = simplify(nd.sub(star(h5s), h5s * star(L)))
    R44 = simplify(nd.neg(beta / (2 * h4 * h5)))
    xs = a.chart.h
    alpha = tuple(simplify(nd.sub(diff(h5s, x), h5s * diff(L, x))) for x in xs)
    h4_term = star(h4) / h4 if variant == "printed" else star(h4) / (2 * h4)
    gamma = simplify(nd.sub(3 * h5s / (2 * h5), h4_term))
    sign = -1.0 if variant == "printed" else 1.0
    R4 = tuple(simplify(nd.sub(sign * a.w[i] * beta / (2 * h5), alpha[i] / (2 * h5)))
               for i in range(3))
    R5 = tuple(simplify(nd.neg(h5 / (2 * h4) * nd.add(star(star(a.n[i])), gamma * star(a.n[i]))))
               for i in range(3))
    return ClosedFormRicci(R22, R44, alpha, beta, gamma, R4, R5, variant)


@dataclass
class KernelRicci:
    """Ricci and Einstein tensors of the canonical d-connection of an ansatz."""

    ricci: ComponentField
    mixed_ricci: ComponentField
    scalar: Expr
    mixed_einstein: ComponentField


def kernel_ricci(a: Ansatz5D) -> KernelRicci:
    g, N = build(a)
    W = anholonomy(N)
    D = canonical_dconnection(g, N)
    ric = ricci(curvature(D, N, W, blocks=False))
    sc = scalar(ric, g)
    return KernelRicci(ric, raise_first(ric, g, "Ric"), sc,
                       raise_first(einstein(ric, sc, g), g, "G"))


@dataclass
class ComparisonReport:
    variant: str
    max_relative: dict           # quantity -> max relative deviation
    zero_pattern: dict           # component label -> max |value|
    skipped_points: list         # point indices with a domain error
    points: int
    tolerance: float
    zero_tolerance: float

    @property
    def worst(self) -> float:
        return max(self.max_relative.values(), default=0.0)

    @property
    def worst_zero(self) -> float:
        return max(self.zero_pattern.values(), default=0.0)

    @property
    def ok(self) -> bool:
        return self.worst <= self.tolerance and self.worst_zero <= self.zero_tolerance

    def failing(self) -> list:
        return sorted(k for k, v in self.max_relative.items() if not v <= self.tolerance)


def comparison_pairs(a: Ansatz5D, cf: ClosedFormRicci, k: KernelRicci):
    """(name, closed form, kernel value) and the zero-pattern components."""
    Rm, Ric = k.mixed_ricci.data, k.ricci.data
    pairs = [("R^2_2", cf.R22, Rm[1, 1]), ("R^3_3", cf.R22, Rm[2, 2]),
             ("R^4_4", cf.R44, Rm[3, 3]), ("R^5_5", cf.R44, Rm[4, 4])]
    for i in range(3):
        pairs.append((f"R_4{i + 1}", cf.R4[i], Ric[3, i]))
        pairs.append((f"R_5{i + 1}", cf.R5[i], Ric[4, i]))
    checked = {(1, 1), (2, 2), (3, 3), (4, 4)} | {(3, i) for i in range(3)} | {(4, i) for i in range(3)}
    zeros = []
    for r in range(5):
        for c in range(5):
            if (r, c) in checked:
                continue
            src = k.mixed_ricci if r == c else k.ricci
            zeros.append((src.label((r, c)), src.data[r, c]))
    return pairs, zeros


def closed_form_vs_kernel(a: Ansatz5D, env: Mapping[str, object], variant: str = "printed",
                          tol: float = 1e-8, zero_tol: float = 1e-10,
                          kernel: Optional[KernelRicci] = None, jobs=None) -> ComparisonReport:
    cf = ricci_closed_form(a, variant)
    k = kernel_ricci(a) if kernel is None else kernel
    pairs, zeros = comparison_pairs(a, cf, k)
    roots = [p[1] for p in pairs] + [p[2] for p in pairs] + [z[1] for z in zeros]
    res = Program(roots).evaluate(env, jobs=jobs)
    vals = res.values
    npts = vals.shape[1]
    bad = ~np.isfinite(vals).all(axis=0)
    keep = ~bad
    P = len(pairs)
    rel = {}
    for r, (name, _, _) in enumerate(pairs):
        dev = relative_deviation(vals[r, keep], vals[P + r, keep])
        rel[name] = nanmax(dev)
    zp = {}
    for r, (label, _) in enumerate(zeros):
        zp[label] = nanmax(np.abs(vals[2 * P + r, keep]))
    return ComparisonReport(variant, rel, zp, [int(p) for p in np.nonzero(bad)[0]], npts, tol, zero_tol)


@dataclass(frozen=True)
class SourceSpec:
    upsilon2: Expr = nd.ZERO
    upsilon4: Expr = nd.ZERO

    def __post_init__(self):
        if not simplify(diff(self.upsilon4, "v")).is_zero:
            raise AnsatzError("Upsilon4 must not depend on v")
        for name in ("upsilon2", "upsilon4"):
            coords, _ = nd.free_names(getattr(self, name))
            if coords - {"x2", "x3", "v"}:
                raise AnsatzError(f"{name} may depend on x2, x3, v only")

    @classmethod
    def from_strings(cls, upsilon2: str = "0", upsilon4: str = "0", chart=None) -> "SourceSpec":
        chart = chart or five_d_chart()
        return cls(parse(upsilon2, chart), parse(upsilon4, chart))

    def mixed(self) -> list:
        """Diagonal source entries Y^1_1 .. Y^5_5."""
        u2, u4 = self.upsilon2, self.upsilon4
        return [nd.add(u2, u4), u2, u2, u4, u4]


@dataclass
class SourceReport:
    structure: dict   # label -> max |residual| of the Einstein block structure
    field_eqs: dict   # label -> max |G^a_a - k Y^a_a|
    off_diagonal: dict
    points: int
    tolerance: float

    @property
    def ok(self) -> bool:
        vals = list(self.structure.values()) + list(self.field_eqs.values()) \
            + list(self.off_diagonal.values())
        return all(np.isfinite(v) and v <= self.tolerance for v in vals)


def einstein_structure(k: KernelRicci) -> dict:
    """Residuals of G^1_1 = -(R^2_2 + R^4_4), G^2_2 = G^3_3 = -R^4_4, G^4_4 = G^5_5 = -R^2_2."""
    G, R = k.mixed_einstein.data, k.mixed_ricci.data
    R22, R44 = R[1, 1], R[3, 3]
    return {
        "G^1_1": nd.add(G[0, 0], nd.add(R22, R44)),
        "G^2_2": nd.add(G[1, 1], R44),
        "G^3_3": nd.add(G[2, 2], R44),
        "G^4_4": nd.add(G[3, 3], R22),
        "G^5_5": nd.add(G[4, 4], R22),
    }


def source_compatibility(a: Ansatz5D, s: SourceSpec, env: Mapping[str, object],
                         k_coupling: float = 1.0, tol: float = 1e-9,
                         kernel: Optional[KernelRicci] = None, jobs=None) -> SourceReport:
    k = kernel_ricci(a) if kernel is None else kernel
    struct = einstein_structure(k)
    G = k.mixed_einstein
    Y = s.mixed()
    eqs = {G.label((r, r)): nd.sub(G.data[r, r], nd.mul(k_coupling, Y[r])) for r in range(5)}
    off = {G.label((r, c)): G.data[r, c] for r in range(5) for c in range(5) if r != c}
    names = list(struct) + list(eqs) + list(off)
    roots = list(struct.values()) + list(eqs.values()) + list(off.values())
    vals = Program(roots).evaluate(env, jobs=jobs).values
    maxes = {nm: nanmax(np.abs(vals[r])) if vals.shape[1] else 0.0 for r, nm in enumerate(names)}
    ns, ne = len(struct), len(eqs)
    return SourceReport(dict(list(maxes.items())[:ns]), dict(list(maxes.items())[ns:ns + ne]),
                        dict(list(maxes.items())[ns + ne:]), vals.shape[1], tol)
