"""Canonical simplification.

Every expression is normalized to a sum of terms ``c * m`` where ``c`` is a
numeric coefficient and ``m`` a monomial: a product of atoms raised to
numeric exponents.  Sums are flattened and like terms (identical monomials)
collected; products are flattened and like bases combined; constant
factors are folded; exponentials multiply into a single ``exp``.  Terms and
factors are ordered by structural digest, so the result is deterministic.

Rewrites never shrink the domain of definition: where the input is defined
the output is defined and equal up to rounding.  (They may widen it, e.g.
``x/x -> 1``.)  :func:`simplify` keeps products of sums factored;
:func:`expand` distributes them.
"""
from __future__ import annotations

import math
from typing import Dict, Tuple

from . import nodes as nd
from .nodes import BINARY, CONST, INV, UNARY, Expr

Factors = Dict[Expr, float]

EXPAND_MAX_POWER = 8


def _is_int(x: float) -> bool:
    return float(x).is_integer()


def _is_even(x: float) -> bool:
    return _is_int(x) and int(x) % 2 == 0


def _is_sum(e: Expr) -> bool:
    return e.kind == BINARY and e.name in ("add", "sub")


class _Simplifier:
    def __init__(self, expand: bool = False):
        self.split_memo: dict = {}
        self.terms_memo: dict = {}
        self.expand = expand

    # -- decomposition ---------------------------------------------------
    def split(self, e: Expr) -> Tuple[float, Factors]:
        """(coefficient, {atom: exponent}) for a canonical expression."""
        hit = self.split_memo.get(e)
        if hit is not None:
            return hit
        res = self._split(e)
        self.split_memo[e] = res
        return res

    def _split(self, e: Expr) -> Tuple[float, Factors]:
        if e.kind == CONST:
            return e.value, {}
        if e.kind == UNARY and e.name == "neg":
            c, f = self.split(e.args[0])
            return -c, f
        if e.kind == BINARY and e.name == "mul":
            ca, fa = self.split(e.args[0])
            cb, fb = self.split(e.args[1])
            return ca * cb, _merge(fa, fb, 1.0)
        if e.kind == BINARY and e.name == "div":
            ca, fa = self.split(e.args[0])
            cb, fb = self.split(e.args[1])
            if cb == 0.0:
                return 1.0, {e: 1.0}
            return ca / cb, _merge(fa, fb, -1.0)
        if e.kind == BINARY and e.name == "pow" and e.args[1].kind == CONST:
            got = self._power_split(e.args[0], e.args[1].value)
            if got is not None:
                return got
        return 1.0, {e: 1.0}

    def _power_split(self, base: Expr, k: float):
        cb, fb = self.split(base)
        if _is_int(k):
            if cb == 0.0 and k < 0:
                return None
            try:
                coef = math.pow(cb, k)
            except (OverflowError, ValueError):
                return None
            if not math.isfinite(coef):
                return None
            return coef, {b: x * k for b, x in fb.items()}
        # non-integer exponent: defined only for a non-negative base
        if cb < 0:
            return None
        coef = math.pow(cb, k)
        if len(fb) == 1:
            (b, x), = fb.items()
            if _is_even(x):
                return coef, {self.canon_abs_atom(b): x * k}
            return coef, {b: x * k}
        out: Factors = {}
        for b, x in fb.items():
            if _is_int(x):
                b = self.canon_abs_atom(b)
            out[b] = out.get(b, 0.0) + x * k
        return coef, out

    def canon_abs_atom(self, b: Expr) -> Expr:
        if b.kind == UNARY and b.name in ("abs", "exp"):
            return b
        return nd.unary("abs", b)

    def terms(self, e: Expr) -> Dict[Expr, float]:
        hit = self.terms_memo.get(e)
        if hit is not None:
            return hit
        if e.kind == BINARY and e.name in ("add", "sub"):
            # walk the left spine iteratively; sums can be thousands of terms long
            right = []
            node = e
            while _is_sum(node) and node not in self.terms_memo:
                right.append((1.0 if node.name == "add" else -1.0, node.args[1]))
                node = node.args[0]
            out = dict(self.terms(node))
            for sign, r in reversed(right):
                for m, c in self.terms(r).items():
                    out[m] = out.get(m, 0.0) + sign * c
        else:
            c, f = self.split(e)
            if len(f) == 1:
                (b, x), = f.items()
                if x == 1.0 and _is_sum(b):
                    out = {m: c * cm for m, cm in self.terms(b).items()}
                    self.terms_memo[e] = out
                    return out
            m = self.product(1.0, f)
            out = {m: c} if c != 0.0 else {}
            if m.kind == CONST and c != 0.0:
                out = {nd.ONE: c * m.value}
        self.terms_memo[e] = out
        return out

    # -- reconstruction --------------------------------------------------
    def product(self, coef: float, factors: Factors) -> Expr:
        if coef == 0.0:
            return nd.ZERO
        norm: Factors = {}
        exp_terms: Dict[Expr, float] = {}
        for b, x in factors.items():
            if x == 0.0:
                continue
            if b.kind == UNARY and b.name == "abs" and _is_even(x):
                b = b.args[0]
            if b.kind == UNARY and b.name == "exp":
                for m, c in self.terms(b.args[0]).items():
                    exp_terms[m] = exp_terms.get(m, 0.0) + c * x
                continue
            norm[b] = norm.get(b, 0.0) + x
        if exp_terms:
            # pull c*ln(y) terms out of the exponent as y^c
            arg_terms: Dict[Expr, float] = {}
            for m, c in exp_terms.items():
                if c == 0.0:
                    continue
                if m.kind == UNARY and m.name == "ln" and m.args[0].kind != CONST:
                    y = m.args[0]
                    norm[y] = norm.get(y, 0.0) + c
                else:
                    arg_terms[m] = c
            arg = self.sum(arg_terms)
            if arg.kind == CONST:
                val = math.exp(arg.value)
                if math.isfinite(val):
                    coef *= val
                else:
                    norm[nd.unary("exp", arg)] = 1.0
            else:
                norm[nd.unary("exp", arg)] = 1.0
        # u^(2k) * |u|^x -> |u|^(x + 2k)
        for b in [b for b in norm if b.kind == UNARY and b.name == "abs"]:
            u = b.args[0]
            x = norm.get(u)
            if x is not None and _is_even(x) and norm[b] != 0.0:
                norm[b] += x
                del norm[u]
        num, den = [], []
        for b in sorted(norm, key=lambda n: n.digest):
            x = norm[b]
            if x == 0.0:
                continue
            if x > 0:
                num.append(b if x == 1.0 else nd.binary("pow", b, nd.const(x)))
            else:
                den.append(b if x == -1.0 else nd.binary("pow", b, nd.const(-x)))
        out = nd.ONE
        for f in num:
            out = f if out is nd.ONE else nd.binary("mul", out, f)
        if coef != 1.0:
            out = nd.mul(nd.const(coef), out)
        d = nd.ONE
        for f in den:
            d = f if d is nd.ONE else nd.binary("mul", d, f)
        if d is not nd.ONE:
            out = nd.binary("div", out, d)
        return out

    def sum(self, terms: Dict[Expr, float]) -> Expr:
        items = [(m, c) for m, c in terms.items() if c != 0.0]
        if not items:
            return nd.ZERO
        items.sort(key=lambda mc: mc[0].digest)
        acc = None
        for m, c in items:
            c_here = c if acc is None else abs(c)
            if m is nd.ONE:
                t = nd.const(c_here)
            else:
                t = self.product(c_here, self.split(m)[1])
            if acc is None:
                acc = t
            elif c > 0:
                acc = nd.binary("add", acc, t)
            else:
                acc = nd.binary("sub", acc, t)
        return acc

    # -- per-node canonicalization ---------------------------------------
    def canon_node(self, node: Expr, kids: tuple) -> Expr:
        kind = node.kind
        if kind in (CONST, "coord", "param"):
            return node
        if kind == INV:
            return nd.make(INV, node.name, node.value, kids)
        if kind == BINARY:
            op = node.name
            a, b = kids
            if op in ("add", "sub"):
                t = dict(self.terms(a))
                sign = 1.0 if op == "add" else -1.0
                for m, c in self.terms(b).items():
                    t[m] = t.get(m, 0.0) + sign * c
                return self.sum(t)
            if op == "mul":
                if self.expand:
                    return self.sum(self._times(self.terms(a), self.terms(b)))
                ca, fa = self.split(a)
                cb, fb = self.split(b)
                return self._from_split(ca * cb, _merge(fa, fb, 1.0))
            if op == "div":
                ca, fa = self.split(a)
                cb, fb = self.split(b)
                if cb == 0.0:
                    return nd.binary("div", a, b)
                if self.expand:
                    inv = {nd.ONE: 1.0} if not fb else self.terms(
                        self.product(1.0, {k: -x for k, x in fb.items()}))
                    t = self._times(self.terms(a), inv)
                    return self.sum({m: c / cb for m, c in t.items()})
                return self._from_split(ca / cb, _merge(fa, fb, -1.0))
            # pow
            if b.kind == CONST:
                if b.value == 0.0:
                    return nd.ONE
                if (self.expand and _is_sum(a) and _is_int(b.value)
                        and 2 <= b.value <= EXPAND_MAX_POWER):
                    base = self.terms(a)
                    acc = base
                    for _ in range(int(b.value) - 1):
                        acc = self._times(acc, base)
                    return self.sum(acc)
                got = self._power_split(a, b.value)
                if got is not None:
                    return self._from_split(*got)
            return nd.power(a, b)
        # unary
        (a,) = kids
        op = node.name
        if op == "neg":
            c, f = self.split(a)
            return self._from_split(-c, f)
        if op == "sqrt":
            got = self._power_split(a, 0.5)
            if got is not None:
                return self._from_split(*got)
            return nd.apply("sqrt", a)
        if op == "abs":
            return self._abs(a)
        if op == "ln":
            return self._ln(a)
        if op == "exp":
            if a.kind == UNARY and a.name == "ln":
                return a.args[0]
            if a.kind == CONST:
                return nd.apply("exp", a)
            return self.product(1.0, {nd.unary("exp", a): 1.0})
        return nd.apply(op, a)

    def _times(self, ta: Dict[Expr, float], tb: Dict[Expr, float]) -> Dict[Expr, float]:
        out: Dict[Expr, float] = {}
        for ma, ca in ta.items():
            fa = self.split(ma)[1]
            for mb, cb in tb.items():
                prod = self.product(ca * cb, _merge(fa, self.split(mb)[1], 1.0))
                for m, c in self.terms(prod).items():
                    out[m] = out.get(m, 0.0) + c
        return out

    def _from_split(self, c: float, f: Factors) -> Expr:
        if len(f) == 1:
            (b, x), = f.items()
            if x == 1.0 and _is_sum(b):
                return self.sum({m: c * cm for m, cm in self.terms(b).items()})
        return self.product(c, f)

    def _abs(self, a: Expr) -> Expr:
        if a.kind == CONST:
            return nd.const(abs(a.value))
        c, f = self.split(a)
        out: Factors = {}
        for b, x in f.items():
            if not _is_int(x) or (b.kind == UNARY and b.name in ("abs", "exp")):
                out[b] = out.get(b, 0.0) + x
            elif _is_even(x):
                out[b] = out.get(b, 0.0) + x
            else:
                ab = nd.unary("abs", b)
                out[ab] = out.get(ab, 0.0) + x
        return self.product(abs(c), out)

    def _ln(self, a: Expr) -> Expr:
        if a.kind == CONST:
            return nd.apply("ln", a)
        if a.kind == UNARY and a.name == "exp":
            return a.args[0]
        c, f = self.split(a)
        if c == 1.0 and len(f) == 1:
            (b, x), = f.items()
            if x == 1.0:
                return nd.unary("ln", b)
        if c == 0.0:
            return nd.unary("ln", a)
        terms: Dict[Expr, float] = {}
        if abs(c) != 1.0:
            terms[nd.ONE] = math.log(abs(c))
        single = len(f) == 1
        for b, x in f.items():
            if b.kind == UNARY and b.name == "exp":
                for m, cm in self.terms(b.args[0]).items():
                    terms[m] = terms.get(m, 0.0) + cm * x
                continue
            if b.kind == UNARY and b.name == "abs":
                lb = nd.unary("ln", b)
            elif not _is_int(x) or (single and c > 0 and not _is_even(x)):
                lb = nd.unary("ln", b)
            else:
                lb = nd.unary("ln", nd.unary("abs", b))
            terms[lb] = terms.get(lb, 0.0) + x
        return self.sum(terms)


def _merge(fa: Factors, fb: Factors, sign: float) -> Factors:
    out = dict(fa)
    for b, x in fb.items():
        out[b] = out.get(b, 0.0) + sign * x
    return out


def simplify(e: Expr) -> Expr:
    """Canonical simplified form of ``e`` (value-preserving where ``e`` is defined)."""
    e = nd.as_expr(e)
    if e._simp is not None:
        return e._simp
    s = _Simplifier()

    def known(node):
        return node._simp is not None

    for node in nd.postorder([e], stop=known):
        if node._simp is not None:
            continue
        kids = tuple(k._simp for k in node.args)
        res = s.canon_node(node, kids)
        node._simp = res
        if res._simp is None:
            res._simp = res
    return e._simp


def _expanded(e: Expr) -> tuple[Expr, "_Simplifier"]:
    s = _Simplifier(expand=True)
    memo: dict = {}
    for node in nd.postorder([e]):
        kids = tuple(memo[k] for k in node.args)
        memo[node] = s.canon_node(node, kids)
    return memo[e], s


def expand(e: Expr) -> Expr:
    """Like :func:`simplify`, but also distributes products over sums and
    expands small positive integer powers of sums."""
    return _expanded(nd.as_expr(e))[0]


def expanded_terms(e: Expr) -> Dict[Expr, float]:
    """Monomial -> coefficient map of the fully expanded form."""
    out, s = _expanded(nd.as_expr(e))
    return dict(s.terms(out))


def is_zero(e: Expr) -> bool:
    """Structural zero test (after canonical simplification)."""
    return simplify(e).is_zero


def struct_equal(a, b, expanded: bool = False, rel: float = 0.0) -> bool:
    """Structural equality after canonicalization.

    With ``expanded`` both sides are fully expanded and compared monomial by
    monomial; ``rel`` tolerates coefficient rounding from reordered
    floating-point products.
    """
    a, b = nd.as_expr(a), nd.as_expr(b)
    if not expanded:
        return simplify(nd.sub(a, b)).is_zero
    ta, tb = expanded_terms(a), expanded_terms(b)
    for m in set(ta) | set(tb):
        ca, cb = ta.get(m, 0.0), tb.get(m, 0.0)
        if abs(ca - cb) > rel * max(abs(ca), abs(cb)):
            return False
    return True
