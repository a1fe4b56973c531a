"""Linear connections in the N-adapted frame.

Connection coefficients are stored as ``Gamma[alpha, beta, gamma]`` meaning
D_{e_gamma} e_beta = Gamma^alpha_{beta gamma} e_alpha: the derivative
direction is the last slot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..expr import nodes as nd
from ..expr.calculus import diff
from ..expr.simplify import simplify
from .fields import ComponentField, zeros
from .metric import DMetric, NConnection, anholonomy, frame_diff, omega


def _sum(terms) -> nd.Expr:
    acc = nd.ZERO
    for t in terms:
        if not t.is_zero:
            acc = nd.add(acc, t)
    return acc


def _half(e):
    return nd.mul(nd.HALF, e)


class DConnection:
    """A distinguished connection given by its four h/v blocks.

    Block layouts (0-based, block-local indices):
    ``L[i, j, k]``, ``Lt[a, b, k]``, ``C[i, j, c]``, ``Ct[a, b, c]``.
    Mixed blocks are zero by construction.
    """

    def __init__(self, chart, L, Lt, C, Ct):
        n, m = chart.n, chart.m
        self.chart = chart
        self.L = np.asarray(L, dtype=object)
        self.Lt = np.asarray(Lt, dtype=object)
        self.C = np.asarray(C, dtype=object)
        self.Ct = np.asarray(Ct, dtype=object)
        expect = {"L": (n, n, n), "Lt": (m, m, n), "C": (n, n, m), "Ct": (m, m, m)}
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"block {name} has shape {getattr(self, name).shape}, want {shape}")
        self._full = None

    def full(self) -> ComponentField:
        if self._full is None:
            n, d = self.chart.n, self.chart.dim
            G = zeros((d, d, d))
            G[:n, :n, :n] = self.L
            G[n:, n:, :n] = self.Lt
            G[:n, :n, n:] = self.C
            G[n:, n:, n:] = self.Ct
            self._full = ComponentField.full("Gamma", self.chart, "udd", G)
        return self._full

    def blocks(self) -> dict:
        c = self.chart
        return {
            "L": ComponentField("L", c, ("hu", "hd", "hd"), self.L),
            "Lt": ComponentField("Lt", c, ("vu", "vd", "hd"), self.Lt),
            "C": ComponentField("C", c, ("hu", "hd", "vd"), self.C),
            "Ct": ComponentField("Ct", c, ("vu", "vd", "vd"), self.Ct),
        }


def as_full(conn) -> ComponentField:
    return conn.full() if isinstance(conn, DConnection) else conn


def _metric_derivatives(G: np.ndarray, N: NConnection) -> np.ndarray:
    d = G.shape[0]
    dG = zeros((d, d, d))  # dG[c, a, b] = e_c G_ab
    for c in range(d):
        for a in range(d):
            for b in range(a, d):
                if G[a, b].is_zero:
                    continue
                val = frame_diff(G[a, b], c, N)
                dG[c, a, b] = val
                dG[c, b, a] = val
    return dG


def levi_civita(g: DMetric, N: NConnection, W: Optional[ComponentField] = None) -> ComponentField:
    """Torsion-free metric connection via the Koszul formula in the adapted frame."""
    chart = g.chart
    d = chart.dim
    W = anholonomy(N) if W is None else W
    Wd = W.data
    G = g.full_block()
    Gi = g.full_inverse()
    dG = _metric_derivatives(G, N)

    def wg(s_up, x, y, z):
        # sum_sigma W^sigma_{x y} G_{sigma z}
        return _sum(Wd[s, x, y] * G[s, z] for s in range(d)
                    if not Wd[s, x, y].is_zero and not G[s, z].is_zero)

    low = zeros((d, d, d))  # low[a, b, c] = G(D_{e_c} e_b, e_a)
    for a in range(d):
        for b in range(d):
            for c in range(d):
                expr = _sum([
                    dG[c, b, a], dG[b, c, a], nd.neg(dG[a, c, b]),
                    wg(None, c, b, a), nd.neg(wg(None, c, a, b)), nd.neg(wg(None, b, a, c)),
                ])
                low[a, b, c] = _half(expr)
    out = zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                out[a, b, c] = simplify(_sum(Gi[a, e] * low[e, b, c] for e in range(d)
                                             if not Gi[a, e].is_zero and not low[e, b, c].is_zero))
    return ComponentField.full("Gamma", chart, "udd", out)


def canonical_dconnection(g: DMetric, N: NConnection) -> DConnection:
    """The canonical d-connection from its block formulas."""
    chart = g.chart
    n, m = chart.n, chart.m
    gi, hi = g.inverse_blocks()
    gb, hb = g.g, g.h
    vv = chart.v

    def eh(f, k):
        return frame_diff(f, k, N)

    def dv(f, c):
        return diff(f, vv[c])

    L = zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                L[i, j, k] = simplify(_half(_sum(
                    gi[i, r] * _sum([eh(gb[j, r], k), eh(gb[k, r], j), nd.neg(eh(gb[j, k], r))])
                    for r in range(n) if not gi[i, r].is_zero)))
    dN = zeros((n, m, m))  # dN[k, a, b] = d_b N_k^a
    for k in range(n):
        for a in range(m):
            for b in range(m):
                dN[k, a, b] = dv(N.coeff(k, a), b)
    Lt = zeros((m, m, n))
    for a in range(m):
        for b in range(m):
            for k in range(n):
                inner = _sum(
                    hi[a, c] * _sum([
                        eh(hb[b, c], k),
                        nd.neg(_sum(hb[dd, c] * dN[k, dd, b] for dd in range(m))),
                        nd.neg(_sum(hb[dd, b] * dN[k, dd, c] for dd in range(m))),
                    ])
                    for c in range(m) if not hi[a, c].is_zero)
                Lt[a, b, k] = simplify(nd.add(dN[k, a, b], _half(inner)))
    C = zeros((n, n, m))
    for i in range(n):
        for j in range(n):
            for c in range(m):
                C[i, j, c] = simplify(_half(_sum(gi[i, k] * dv(gb[j, k], c) for k in range(n)
                                                 if not gi[i, k].is_zero)))
    Ct = zeros((m, m, m))
    for a in range(m):
        for b in range(m):
            for c in range(m):
                Ct[a, b, c] = simplify(_half(_sum(
                    hi[a, dd] * _sum([dv(hb[b, dd], c), dv(hb[c, dd], b), nd.neg(dv(hb[b, c], dd))])
                    for dd in range(m) if not hi[a, dd].is_zero)))
    return DConnection(chart, L, Lt, C, Ct)


def canonical_distortion(g: DMetric, N: NConnection) -> ComponentField:
    """Distortion P with canonical = Levi-Civita + P, written from (g, h, N) alone."""
    chart = g.chart
    n, m, d = chart.n, chart.m, chart.dim
    gi, hi = g.inverse_blocks()
    gb, hb = g.g, g.h
    Om = omega(N)
    vv = chart.v
    P = zeros((d, d, d))

    def dv(f, c):
        return diff(f, vv[c])

    def dN(l, e, c):  # d_c N_l^e
        return dv(N.coeff(l, e), c)

    for i in range(n):
        for j in range(n):
            for c in range(m):
                P[i, j, n + c] = simplify(nd.neg(_half(_sum(
                    gi[i, k] * _sum(Om[a, j, k] * hb[c, a] for a in range(m))
                    for k in range(n) if not gi[i, k].is_zero))))
    for a in range(m):
        for j in range(n):
            for k in range(n):
                t1 = _sum(hi[a, c] * dv(gb[j, k], c) for c in range(m) if not hi[a, c].is_zero)
                P[n + a, j, k] = simplify(_half(nd.sub(t1, Om[a, j, k])))
    for i in range(n):
        for b in range(m):
            for k in range(n):
                P[i, n + b, k] = simplify(nd.neg(_half(_sum(
                    gi[i, l] * nd.add(dv(gb[k, l], b), _sum(Om[dd, k, l] * hb[dd, b] for dd in range(m)))
                    for l in range(n) if not gi[i, l].is_zero))))
            for c in range(m):
                P[i, n + b, n + c] = simplify(_half(_sum(
                    gi[i, l] * _sum([
                        frame_diff(hb[b, c], l, N),
                        nd.neg(_sum(hb[dd, b] * dN(l, dd, c) for dd in range(m))),
                        nd.neg(_sum(hb[dd, c] * dN(l, dd, b) for dd in range(m))),
                    ])
                    for l in range(n) if not gi[i, l].is_zero)))
    for a in range(m):
        for j in range(n):
            for c in range(m):
                P[n + a, j, n + c] = simplify(nd.neg(_half(_sum(
                    hi[a, dd] * _sum([
                        frame_diff(hb[c, dd], j, N),
                        nd.neg(_sum(hb[e, dd] * dN(j, e, c) for e in range(m))),
                        nd.neg(_sum(hb[e, c] * dN(j, e, dd) for e in range(m))),
                    ])
                    for dd in range(m) if not hi[a, dd].is_zero))))
    return ComponentField.full("P", chart, "udd", P)


@dataclass
class CanonicalPaths:
    """Both constructions of the canonical d-connection."""

    direct: DConnection
    via_levi_civita: ComponentField
    levi_civita: ComponentField
    distortion: ComponentField


def canonical_paths(g: DMetric, N: NConnection, W=None) -> CanonicalPaths:
    lc = levi_civita(g, N, W)
    P = canonical_distortion(g, N)
    return CanonicalPaths(canonical_dconnection(g, N), lc + P, lc, P)


def nonmetricity(conn, g: DMetric, N: NConnection) -> ComponentField:
    """Q_{c a b} = -(e_c G_ab - Gamma^d_{a c} G_db - Gamma^d_{b c} G_ad), indexed [c, a, b]."""
    Gam = as_full(conn).data
    chart = g.chart
    d = chart.dim
    G = g.full_block()
    out = zeros((d, d, d))
    for c in range(d):
        for a in range(d):
            for b in range(a, d):
                expr = _sum([
                    frame_diff(G[a, b], c, N),
                    nd.neg(_sum(Gam[e, a, c] * G[e, b] for e in range(d) if not G[e, b].is_zero)),
                    nd.neg(_sum(Gam[e, b, c] * G[a, e] for e in range(d) if not G[a, e].is_zero)),
                ])
                val = nd.neg(expr)
                out[c, a, b] = val
                out[c, b, a] = val
    return ComponentField.full("Q", chart, "ddd", out)


@dataclass
class Torsion:
    full: ComponentField
    blocks: dict

    def block_mismatch(self) -> ComponentField:
        """Named blocks minus the corresponding generic components (all should vanish)."""
        return _block_vs_full(self)


TORSION_BLOCKS = {
    # name: slot signature of the block
    "T^i_jk": ("hu", "hd", "hd"),
    "T^i_ja": ("hu", "hd", "vd"),
    "T^a_ji": ("vu", "hd", "hd"),
    "T^a_bi": ("vu", "vd", "hd"),
    "T^a_bc": ("vu", "vd", "vd"),
}


def _offset(chart, slot):
    return chart.n if slot[0] == "v" else 0


def torsion(conn, N: NConnection, W: Optional[ComponentField] = None) -> Torsion:
    """Frame torsion T^a_bc = Gamma^a_cb - Gamma^a_bc - W^a_bc plus named h/v blocks.

    For a :class:`DConnection` the blocks come from the block formulas; the
    block ``T^i_ja`` is stored as the generic component, which equals minus
    the C-coefficient.  For a general connection they are read off ``full``.
    """
    chart = N.chart
    n, m, d = chart.n, chart.m, chart.dim
    W = anholonomy(N) if W is None else W
    Gam = as_full(conn).data
    out = zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(b + 1, d):
                val = simplify(_sum([Gam[a, c, b], nd.neg(Gam[a, b, c]), nd.neg(W.data[a, b, c])]))
                out[a, b, c] = val
                out[a, c, b] = nd.neg(val)
    full = ComponentField.full("T", chart, "udd", out)
    blocks = {}
    if isinstance(conn, DConnection):
        Om = omega(N)
        L, Lt, C, Ct = conn.L, conn.Lt, conn.C, conn.Ct
        hh = zeros((n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    hh[i, j, k] = simplify(nd.sub(L[i, k, j], L[i, j, k]))
        hv = zeros((n, n, m))
        for i in range(n):
            for j in range(n):
                for a in range(m):
                    hv[i, j, a] = nd.neg(C[i, j, a])
        vhh = Om.copy()
        vvh = zeros((m, m, n))
        for a in range(m):
            for b in range(m):
                for i in range(n):
                    vvh[a, b, i] = simplify(nd.sub(diff(N.coeff(i, a), chart.v[b]), Lt[a, b, i]))
        vvv = zeros((m, m, m))
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    vvv[a, b, c] = simplify(nd.sub(Ct[a, c, b], Ct[a, b, c]))
        tables = [hh, hv, vhh, vvh, vvv]
    else:
        tables = []
        for name, slots in TORSION_BLOCKS.items():
            o = [_offset(chart, s) for s in slots]
            ext = [n if s[0] == "h" else m for s in slots]
            tables.append(full.data[o[0]:o[0] + ext[0], o[1]:o[1] + ext[1], o[2]:o[2] + ext[2]])
    for (name, slots), tab in zip(TORSION_BLOCKS.items(), tables):
        blocks[name] = ComponentField("T", chart, slots, np.asarray(tab, dtype=object))
    return Torsion(full, blocks)


def _block_vs_full(t: Torsion) -> ComponentField:
    chart = t.full.chart
    d = chart.dim
    diffs = zeros((d, d, d))
    for name, blk in t.blocks.items():
        o = [_offset(chart, s) for s in blk.slots]
        for idx in blk.indices():
            full_idx = tuple(x + off for x, off in zip(idx, o))
            diffs[full_idx] = nd.sub(blk.data[idx], t.full.data[full_idx])
    return ComponentField.full("dT", chart, "udd", diffs)
