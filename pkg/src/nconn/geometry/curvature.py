"""Curvature, Ricci, scalar and Einstein tensors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..expr import nodes as nd
from ..expr.calculus import diff
from ..expr.nodes import Expr
from ..expr.simplify import simplify
from .connection import DConnection, _sum, as_full
from .fields import ComponentField, zeros
from .metric import DMetric, NConnection, anholonomy, frame_diff, omega

# name -> slot ranges of the block (index order: upper, then lowers)
CURVATURE_BLOCKS = {
    "R^i_hjk": ("hu", "hd", "hd", "hd"),
    "R^a_bjk": ("vu", "vd", "hd", "hd"),
    "R^i_jka": ("hu", "hd", "hd", "vd"),
    "R^c_bka": ("vu", "vd", "hd", "vd"),
    "R^i_jbc": ("hu", "hd", "vd", "vd"),
    "R^a_bcd": ("vu", "vd", "vd", "vd"),
}


@dataclass
class Curvature:
    """Generic frame curvature plus, for d-connections, the six h/v blocks.

    ``full[a, b, c, d]`` is R^a_{b c d} = (R(e_c, e_d) e_b)^a.  The blocks keep
    the last two lower slots in the opposite order: block entry
    ``[a, b, c, d]`` corresponds to ``full[a, b, d, c]``.
    """

    full: ComponentField
    blocks: dict = field(default_factory=dict)

    def block_pairs(self):
        """Yield (name, block index, block expr, matching generic expr)."""
        chart = self.full.chart
        for name, blk in self.blocks.items():
            off = [chart.n if s[0] == "v" else 0 for s in blk.slots]
            for idx in blk.indices():
                a, b, c, d = (x + o for x, o in zip(idx, off))
                yield name, idx, blk.data[idx], self.full.data[a, b, d, c]


def curvature(conn, N: NConnection, W: Optional[ComponentField] = None,
              blocks: bool = True) -> Curvature:
    """R^a_bcd = e_c Gamma^a_bd - e_d Gamma^a_bc + Gamma^m_bd Gamma^a_mc
    - Gamma^m_bc Gamma^a_md - Gamma^a_bm W^m_cd."""
    chart = N.chart
    d = chart.dim
    W = anholonomy(N) if W is None else W
    Gam = as_full(conn).data
    Wd = W.data
    R = zeros((d, d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(c + 1, d):
                    terms = [
                        frame_diff(Gam[a, b, e], c, N),
                        nd.neg(frame_diff(Gam[a, b, c], e, N)),
                    ]
                    for mu in range(d):
                        if not Gam[mu, b, e].is_zero and not Gam[a, mu, c].is_zero:
                            terms.append(Gam[mu, b, e] * Gam[a, mu, c])
                        if not Gam[mu, b, c].is_zero and not Gam[a, mu, e].is_zero:
                            terms.append(nd.neg(Gam[mu, b, c] * Gam[a, mu, e]))
                        if not Gam[a, b, mu].is_zero and not Wd[mu, c, e].is_zero:
                            terms.append(nd.neg(Gam[a, b, mu] * Wd[mu, c, e]))
                    val = _sum(terms)
                    R[a, b, c, e] = val
                    R[a, b, e, c] = nd.neg(val)
    out = Curvature(ComponentField.full("R", chart, "uddd", R))
    if blocks and isinstance(conn, DConnection):
        out.blocks = dcurvature_blocks(conn, N)
    return out


def dcurvature_blocks(D: DConnection, N: NConnection) -> dict:
    """The six h/v curvature blocks of a d-connection from block formulas."""
    chart = N.chart
    n, m = chart.n, chart.m
    L, Lt, C, Ct = D.L, D.Lt, D.C, D.Ct
    Om = omega(N)

    def eh(f, k):
        return frame_diff(f, k, N)

    def ev(f, c):
        return diff(f, chart.v[c])

    # T^b_{ka} = d_a N_k^b - Lt^b_{ak}, indexed [b, k, a]
    Tv = zeros((m, n, m))
    for b in range(m):
        for k in range(n):
            for a in range(m):
                Tv[b, k, a] = nd.sub(ev(N.coeff(k, b), a), Lt[b, a, k])

    def S(*terms) -> Expr:
        return _sum(t for t in terms if not t.is_zero)

    hhhh = zeros((n, n, n, n))
    for i in range(n):
        for h in range(n):
            for j in range(n):
                for k in range(n):
                    hhhh[i, h, j, k] = S(
                        eh(L[i, h, j], k), nd.neg(eh(L[i, h, k], j)),
                        _sum(L[mm, h, j] * L[i, mm, k] for mm in range(n)),
                        nd.neg(_sum(L[mm, h, k] * L[i, mm, j] for mm in range(n))),
                        _sum(C[i, h, a] * Om[a, k, j] for a in range(m)),
                    )
    vvhh = zeros((m, m, n, n))
    for a in range(m):
        for b in range(m):
            for j in range(n):
                for k in range(n):
                    vvhh[a, b, j, k] = S(
                        eh(Lt[a, b, j], k), nd.neg(eh(Lt[a, b, k], j)),
                        _sum(Lt[c, b, j] * Lt[a, c, k] for c in range(m)),
                        nd.neg(_sum(Lt[c, b, k] * Lt[a, c, j] for c in range(m))),
                        _sum(Ct[a, b, c] * Om[c, k, j] for c in range(m)),
                    )
    hhhv = zeros((n, n, n, m))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for a in range(m):
                    # h-covariant derivative D_k C^i_{ja}
                    DkC = S(
                        eh(C[i, j, a], k),
                        _sum(L[i, mm, k] * C[mm, j, a] for mm in range(n)),
                        nd.neg(_sum(L[mm, j, k] * C[i, mm, a] for mm in range(n))),
                        nd.neg(_sum(Lt[b, a, k] * C[i, j, b] for b in range(m))),
                    )
                    hhhv[i, j, k, a] = S(
                        ev(L[i, j, k], a), nd.neg(DkC),
                        _sum(C[i, j, b] * Tv[b, k, a] for b in range(m)),
                    )
    vvhv = zeros((m, m, n, m))
    for c in range(m):
        for b in range(m):
            for k in range(n):
                for a in range(m):
                    DkC = S(
                        eh(Ct[c, b, a], k),
                        _sum(Lt[c, dd, k] * Ct[dd, b, a] for dd in range(m)),
                        nd.neg(_sum(Lt[dd, b, k] * Ct[c, dd, a] for dd in range(m))),
                        nd.neg(_sum(Lt[dd, a, k] * Ct[c, b, dd] for dd in range(m))),
                    )
                    vvhv[c, b, k, a] = S(
                        ev(Lt[c, b, k], a), nd.neg(DkC),
                        _sum(Ct[c, b, dd] * Tv[dd, k, a] for dd in range(m)),
                    )
    hhvv = zeros((n, n, m, m))
    for i in range(n):
        for j in range(n):
            for b in range(m):
                for c in range(m):
                    hhvv[i, j, b, c] = S(
                        ev(C[i, j, b], c), nd.neg(ev(C[i, j, c], b)),
                        _sum(C[h, j, b] * C[i, h, c] for h in range(n)),
                        nd.neg(_sum(C[h, j, c] * C[i, h, b] for h in range(n))),
                    )
    vvvv = zeros((m, m, m, m))
    for a in range(m):
        for b in range(m):
            for c in range(m):
                for dd in range(m):
                    vvvv[a, b, c, dd] = S(
                        ev(Ct[a, b, c], dd), nd.neg(ev(Ct[a, b, dd], c)),
                        _sum(Ct[e, b, c] * Ct[a, e, dd] for e in range(m)),
                        nd.neg(_sum(Ct[e, b, dd] * Ct[a, e, c] for e in range(m))),
                    )
    tables = [hhhh, vvhh, hhhv, vvhv, hhvv, vvvv]
    return {name: ComponentField("R", chart, slots, tab)
            for (name, slots), tab in zip(CURVATURE_BLOCKS.items(), tables)}


def ricci(R) -> ComponentField:
    """Ricci tensor R_bd = R^a_{b a d} (not assumed symmetric)."""
    full = R.full if isinstance(R, Curvature) else R
    chart = full.chart
    d = chart.dim
    out = zeros((d, d))
    for b in range(d):
        for e in range(d):
            out[b, e] = _sum(full.data[a, b, a, e] for a in range(d))
    return ComponentField.full("Ric", chart, "dd", out)


def dricci(R: Curvature) -> ComponentField:
    """Ricci tensor contracted block by block from the h/v curvature blocks."""
    chart = R.full.chart
    n, m, d = chart.n, chart.m, chart.dim
    B = {k: v.data for k, v in R.blocks.items()}
    out = zeros((d, d))
    for i in range(n):
        for j in range(n):
            out[i, j] = _sum(B["R^i_hjk"][k, i, j, k] for k in range(n))
        for a in range(m):
            out[i, n + a] = nd.neg(_sum(B["R^i_jka"][k, i, k, a] for k in range(n)))
            out[n + a, i] = _sum(B["R^c_bka"][b, a, i, b] for b in range(m))
    for a in range(m):
        for b in range(m):
            out[n + a, n + b] = _sum(B["R^a_bcd"][c, a, b, c] for c in range(m))
    return ComponentField.full("Ric", chart, "dd", out)


def scalar(ric: ComponentField, g: DMetric) -> Expr:
    Gi = g.full_inverse()
    d = g.chart.dim
    return _sum(Gi[a, b] * ric.data[a, b] for a in range(d) for b in range(d)
                if not Gi[a, b].is_zero and not ric.data[a, b].is_zero)


def split_scalar(ric: ComponentField, g: DMetric) -> tuple[Expr, Expr]:
    """(g^ij R_ij, h^ab R_ab)."""
    gi, hi = g.inverse_blocks()
    n, m = g.chart.n, g.chart.m
    hpart = _sum(gi[i, j] * ric.data[i, j] for i in range(n) for j in range(n))
    vpart = _sum(hi[a, b] * ric.data[n + a, n + b] for a in range(m) for b in range(m))
    return hpart, vpart


def einstein(ric: ComponentField, R: Expr, g: DMetric) -> ComponentField:
    """G_ab = R_ab - 1/2 G_ab R in the adapted frame."""
    G = g.full_block()
    d = g.chart.dim
    out = zeros((d, d))
    half_r = nd.mul(nd.HALF, R)
    for a in range(d):
        for b in range(d):
            out[a, b] = nd.sub(ric.data[a, b], G[a, b] * half_r) if not G[a, b].is_zero \
                else ric.data[a, b]
    return ComponentField.full("G", g.chart, "dd", out)


def raise_first(t: ComponentField, g: DMetric, name: Optional[str] = None) -> ComponentField:
    """Mixed components T^a_b = G^{ac} T_cb."""
    Gi = g.full_inverse()
    d = g.chart.dim
    out = zeros((d, d))
    for a in range(d):
        for b in range(d):
            out[a, b] = _sum(Gi[a, c] * t.data[c, b] for c in range(d) if not Gi[a, c].is_zero)
    return ComponentField(name or t.name, g.chart, ("fu", "fd"), out)
