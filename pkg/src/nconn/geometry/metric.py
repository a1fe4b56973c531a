"""Block metrics, N-connections, adapted frames and anholonomy."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..expr import nodes as nd
from ..expr.calculus import diff, elongated_diff
from ..expr.nodes import Expr
from ..expr.parser import parse
from ..expr.simplify import simplify
from .chart import SplitChart
from .fields import ComponentField, zeros


def _table(rows, chart: SplitChart, shape: tuple) -> np.ndarray:
    arr = zeros(shape)
    rows = list(rows)
    if len(rows) != shape[0]:
        raise ValueError(f"expected {shape[0]} rows, got {len(rows)}")
    for r, row in enumerate(rows):
        row = list(row)
        if len(row) != shape[1]:
            raise ValueError(f"row {r}: expected {shape[1]} entries, got {len(row)}")
        for c, item in enumerate(row):
            arr[r, c] = parse(item, chart) if isinstance(item, str) else nd.as_expr(item)
    return arr


class NConnection:
    """Coefficients N_i^a (n x m table); ``coeff(i, a)`` uses 0-based indices."""

    def __init__(self, chart: SplitChart, table=None):
        self.chart = chart
        self.table = zeros((chart.n, chart.m)) if table is None else _table(
            table, chart, (chart.n, chart.m))

    @classmethod
    def zero(cls, chart: SplitChart) -> "NConnection":
        return cls(chart)

    def coeff(self, i: int, a: int) -> Expr:
        if not (0 <= i < self.chart.n and 0 <= a < self.chart.m):
            raise IndexError(f"N index ({i}, {a}) out of range")
        return self.table[i, a]

    @property
    def is_zero(self) -> bool:
        return all(e.is_zero for e in self.table.flat)


class DMetric:
    """Horizontal block g_ij and vertical block h_ab of an adapted-frame metric."""

    def __init__(self, chart: SplitChart, g, h, check: bool = True):
        self.chart = chart
        self.g = _table(g, chart, (chart.n, chart.n))
        self.h = _table(h, chart, (chart.m, chart.m))
        if check:
            for name, blk in (("g", self.g), ("h", self.h)):
                k = blk.shape[0]
                for r in range(k):
                    for c in range(r + 1, k):
                        if simplify(nd.sub(blk[r, c], blk[c, r])) is not nd.ZERO:
                            raise ValueError(f"{name} block is not symmetric at ({r}, {c})")
        self._inv = None

    @classmethod
    def diagonal(cls, chart: SplitChart, g: Sequence, h: Sequence) -> "DMetric":
        gd = [[g[r] if r == c else 0 for c in range(chart.n)] for r in range(chart.n)]
        hd = [[h[r] if r == c else 0 for c in range(chart.m)] for r in range(chart.m)]
        return cls(chart, gd, hd, check=False)

    def full_block(self) -> np.ndarray:
        """blockdiag(g, h) as a (n+m) square table."""
        n, d = self.chart.n, self.chart.dim
        G = zeros((d, d))
        G[:n, :n] = self.g
        G[n:, n:] = self.h
        return G

    def inverse_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        if self._inv is None:
            self._inv = (invert(self.g), invert(self.h))
        return self._inv

    def full_inverse(self) -> np.ndarray:
        n, d = self.chart.n, self.chart.dim
        gi, hi = self.inverse_blocks()
        out = zeros((d, d))
        out[:n, :n] = gi
        out[n:, n:] = hi
        return out


def _det(M: np.ndarray) -> Expr:
    k = M.shape[0]
    if k == 1:
        return M[0, 0]
    if k == 2:
        return nd.sub(M[0, 0] * M[1, 1], M[0, 1] * M[1, 0])
    acc = nd.ZERO
    for c in range(k):
        minor = np.delete(np.delete(M, 0, axis=0), c, axis=1)
        term = M[0, c] * _det(minor)
        acc = nd.add(acc, term) if c % 2 == 0 else nd.sub(acc, term)
    return acc


def invert(M: np.ndarray) -> np.ndarray:
    """Symbolic inverse for diagonal blocks and sizes <= 3; per-point numeric beyond."""
    k = M.shape[0]
    out = zeros((k, k))
    offdiag = any(not M[r, c].is_zero for r in range(k) for c in range(k) if r != c)
    if not offdiag:
        for r in range(k):
            out[r, r] = simplify(nd.div(nd.ONE, M[r, r]))
        return out
    if k <= 3:
        det = simplify(_det(M))
        for r in range(k):
            for c in range(k):
                minor = np.delete(np.delete(M, c, axis=0), r, axis=1)
                cof = _det(minor) if k > 1 else nd.ONE
                if (r + c) % 2:
                    cof = nd.neg(cof)
                out[r, c] = simplify(nd.div(cof, det))
        return out
    flat = tuple(M.flat)
    for r in range(k):
        for c in range(k):
            out[r, c] = nd.inverse_entry(flat, k, r, c)
    return out


def frame_diff(f: Expr, alpha: int, N: NConnection) -> Expr:
    """Action of the adapted frame vector e_alpha on a scalar."""
    chart = N.chart
    if alpha < chart.n:
        return elongated_diff(f, alpha, N)
    return diff(f, chart.v[alpha - chart.n])


def frames(N: NConnection) -> tuple[np.ndarray, np.ndarray]:
    """(frame, coframe) coefficient matrices.

    ``frame[mu, alpha]`` is the coordinate component mu of e_alpha;
    ``coframe[alpha, mu]`` the component mu of the 1-form theta^alpha.
    """
    chart = N.chart
    n, d = chart.n, chart.dim
    E = zeros((d, d))
    Th = zeros((d, d))
    for k in range(d):
        E[k, k] = nd.ONE
        Th[k, k] = nd.ONE
    for i in range(n):
        for a in range(chart.m):
            E[n + a, i] = nd.neg(N.coeff(i, a))
            Th[n + a, i] = N.coeff(i, a)
    return E, Th


def omega(N: NConnection) -> np.ndarray:
    """N-connection curvature Omega^a_ij = e_i N_j^a - e_j N_i^a, indexed [a, i, j]."""
    chart = N.chart
    out = zeros((chart.m, chart.n, chart.n))
    for a in range(chart.m):
        for i in range(chart.n):
            for j in range(i + 1, chart.n):
                val = simplify(nd.sub(elongated_diff(N.coeff(j, a), i, N),
                                      elongated_diff(N.coeff(i, a), j, N)))
                out[a, i, j] = val
                out[a, j, i] = nd.neg(val)
    return out


def anholonomy(N: NConnection) -> ComponentField:
    """Structure functions W^c_ab of [e_a, e_b] = W^c_ab e_c, indexed [c, a, b]."""
    chart = N.chart
    n, d = chart.n, chart.dim
    W = zeros((d, d, d))
    Om = omega(N)
    for i in range(n):
        for a in range(chart.m):
            for b in range(chart.m):
                val = simplify(diff(N.coeff(i, b), chart.v[a]))
                W[n + b, i, n + a] = val
                W[n + b, n + a, i] = nd.neg(val)
        for j in range(n):
            for a in range(chart.m):
                W[n + a, i, j] = nd.neg(Om[a, i, j])
    return ComponentField.full("W", chart, "udd", W)


def assemble_full_metric(g: DMetric, N: NConnection) -> ComponentField:
    """Coordinate-basis metric: the coframe pull-back of blockdiag(g, h)."""
    chart = g.chart
    _, Th = frames(N)
    G = g.full_block()
    d = chart.dim
    out = zeros((d, d))
    for mu in range(d):
        for nu in range(mu, d):
            acc = nd.ZERO
            for a in range(d):
                if Th[a, mu].is_zero:
                    continue
                for b in range(d):
                    if Th[b, nu].is_zero or G[a, b].is_zero:
                        continue
                    acc = nd.add(acc, Th[a, mu] * Th[b, nu] * G[a, b])
            acc = simplify(acc)
            out[mu, nu] = acc
            out[nu, mu] = acc
    return ComponentField.full("g", chart, "dd", out)
