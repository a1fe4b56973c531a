"""Exact partial differentiation and substitution on expression DAGs."""
from __future__ import annotations

from typing import Mapping

from . import nodes as nd
from .nodes import BINARY, CONST, COORD, INV, PARAM, UNARY, Expr


def _inverse_derivative(node: Expr, d_entries: list[Expr]) -> Expr:
    size, i, j = nd.inverse_index(node)
    entries = node.args

    def inv(r, c):
        return nd.inverse_entry(entries, size, r, c)

    acc = nd.ZERO
    for k in range(size):
        for l in range(size):
            dkl = d_entries[k * size + l]
            if dkl.is_zero:
                continue
            acc = nd.sub(acc, inv(i, k) * dkl * inv(l, j))
    return acc


def _local_derivative(node: Expr, name: str, d: dict[Expr, Expr]) -> Expr:
    kind = node.kind
    if kind == CONST or kind == PARAM:
        return nd.ZERO
    if kind == COORD:
        return nd.ONE if node.name == name else nd.ZERO
    if kind == INV:
        return _inverse_derivative(node, [d[a] for a in node.args])
    if kind == UNARY:
        (a,) = node.args
        da = d[a]
        if da.is_zero:
            return nd.ZERO
        op = node.name
        if op == "neg":
            return nd.neg(da)
        if op == "sin":
            return nd.cos(a) * da
        if op == "cos":
            return nd.neg(nd.sin(a) * da)
        if op == "exp":
            return node * da
        if op == "ln":
            return da / a
        if op == "sqrt":
            return da / (nd.TWO * node)
        if op == "abs":
            # sign(a) written as a/|a|: undefined (domain error) at the kink
            return (a / node) * da
        raise AssertionError(op)
    if kind == BINARY:
        a, b = node.args
        da, db = d[a], d[b]
        op = node.name
        if op == "add":
            return nd.add(da, db)
        if op == "sub":
            return nd.sub(da, db)
        if op == "mul":
            return nd.add(da * b, a * db)
        if op == "div":
            if db.is_zero:
                return da / b
            return (da * b - a * db) / nd.power(b, nd.TWO)
        if op == "pow":
            if db.is_zero:
                if b.kind == CONST:
                    return b * nd.power(a, b.value - 1.0) * da
                return b * nd.power(a, b - nd.ONE) * da
            if da.is_zero:
                return node * nd.ln(a) * db
            return node * (db * nd.ln(a) + b * da / a)
        raise AssertionError(op)
    raise AssertionError(kind)


def diff(e: Expr, coord) -> Expr:
    """Exact partial derivative of ``e`` with respect to a coordinate.

    ``coord`` may be a coordinate name or a coordinate node.  Results are
    cached on the nodes, so repeated derivatives of shared subtrees are free.
    """
    name = coord.name if isinstance(coord, Expr) else str(coord)
    cached = e._dcache.get(name) if e._dcache else None
    if cached is not None:
        return cached
    d: dict[Expr, Expr] = {}
    def known(node):
        return node._dcache is not None and name in node._dcache

    for node in nd.postorder([e], stop=known):
        cache = node._dcache
        if cache is not None and name in cache:
            d[node] = cache[name]
            continue
        if node.kind == CONST or node.kind == PARAM:
            d[node] = nd.ZERO
            continue
        res = _local_derivative(node, name, d)
        if node._dcache is None:
            node._dcache = {}
        node._dcache[name] = res
        d[node] = res
    return d[e]


def elongated_diff(e: Expr, i: int, N) -> Expr:
    """N-elongated horizontal derivative e_i f = d_i f - N_i^a d_a f.

    ``i`` is the 0-based horizontal index; ``N`` supplies ``chart`` and
    ``coeff(i, a)``.
    """
    chart = N.chart
    if not 0 <= i < chart.n:
        raise IndexError(f"horizontal index {i} out of range 0..{chart.n - 1}")
    out = diff(e, chart.h[i])
    for a, y in enumerate(chart.v):
        nia = N.coeff(i, a)
        if nia.is_zero:
            continue
        dy = diff(e, y)
        if dy.is_zero:
            continue
        out = nd.sub(out, nia * dy)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace coordinates/parameters by expressions (names -> Expr)."""
    mapping = {k: nd.as_expr(v) for k, v in mapping.items()}
    out: dict[Expr, Expr] = {}
    for node in nd.postorder([e]):
        if node.kind in (COORD, PARAM):
            out[node] = mapping.get(node.name, node)
        elif node.kind == CONST:
            out[node] = node
        elif node.kind == UNARY:
            out[node] = nd.apply(node.name, out[node.args[0]])
        elif node.kind == BINARY:
            a, b = (out[x] for x in node.args)
            out[node] = {
                "add": nd.add, "sub": nd.sub, "mul": nd.mul,
                "div": nd.div, "pow": nd.power,
            }[node.name](a, b)
        else:
            out[node] = nd.make(node.kind, node.name, node.value,
                                tuple(out[x] for x in node.args))
    return out[e]
