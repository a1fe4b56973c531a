"""Hash-consed expression nodes.

Every node is interned: two structurally equal trees are the same Python
object, so ``a is b`` is structural equality and repeated curvature
subexpressions share storage.  Nodes are immutable after construction.

The arithmetic helpers (``add``, ``mul``, ...) fold constants and the usual
0/1 identities on the fly; the raw constructor ``make`` does no folding and
is what the parser uses so that parsed trees are faithful to the text.
"""
from __future__ import annotations

import hashlib
import math
import struct
import threading
import weakref
from typing import Iterable, Union

CONST = "const"
COORD = "coord"
PARAM = "param"
UNARY = "unary"
BINARY = "binary"
INV = "inv"  # entry of a numerically inverted matrix block

UNARY_OPS = ("neg", "sin", "cos", "exp", "ln", "sqrt", "abs")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

Number = Union[int, float]

_lock = threading.Lock()
_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """Immutable symbolic scalar over chart coordinates and named parameters."""

    __slots__ = ("kind", "name", "value", "args", "digest", "_hash", "_dcache",
                 "_simp", "__weakref__")

    def __init__(self, *a, **k):  # pragma: no cover - guarded
        raise TypeError("use nconn.expr constructors; Expr is interned")

    # -- identity -----------------------------------------------------------
    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __ne__(self, other) -> bool:
        return self is not other

    def __reduce__(self):
        return (make, (self.kind, self.name, self.value, self.args))

    def __repr__(self) -> str:
        from .parser import to_string

        text = to_string(self)
        if len(text) > 200:
            text = text[:197] + "..."
        return f"Expr({text!r})"

    def __str__(self) -> str:
        from .parser import to_string

        return to_string(self)

    # -- predicates ---------------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.kind == CONST

    def is_number(self, x: float) -> bool:
        return self.kind == CONST and self.value == x

    @property
    def is_zero(self) -> bool:
        return self.kind == CONST and self.value == 0.0

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self


def _digest(kind: str, name: str, value: float, args: tuple) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(kind.encode())
    h.update(b"\x00")
    h.update(name.encode())
    h.update(struct.pack("<d", value))
    for a in args:
        h.update(a.digest.to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def make(kind: str, name: str = "", value: float = 0.0, args: tuple = ()) -> Expr:
    """Raw interning constructor (no simplification)."""
    if kind == CONST:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value!r}")
        if value == 0.0:
            value = 0.0  # drop the sign of -0.0
    key = (kind, name, value, args)
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is not None:
            return node
        node = object.__new__(Expr)
        node.kind = kind
        node.name = name
        node.value = value
        node.args = args
        node.digest = _digest(kind, name, value, args)
        node._hash = node.digest
        node._dcache = None
        node._simp = None
        _table[key] = node
        return node


def const(x: Number) -> Expr:
    return make(CONST, value=x)


def coord(name: str) -> Expr:
    return make(COORD, name=name)


def param(name: str) -> Expr:
    return make(PARAM, name=name)


def unary(op: str, a: Expr) -> Expr:
    if op not in UNARY_OPS:
        raise ValueError(f"unknown unary op {op!r}")
    return make(UNARY, name=op, args=(a,))


def binary(op: str, a: Expr, b: Expr) -> Expr:
    if op not in BINARY_OPS:
        raise ValueError(f"unknown binary op {op!r}")
    return make(BINARY, name=op, args=(a, b))


ZERO = const(0)
ONE = const(1)
TWO = const(2)
HALF = const(0.5)
MINUS_ONE = const(-1)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


# -- folding arithmetic ------------------------------------------------------

def add(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if a.kind == CONST and b.kind == CONST:
        return const(a.value + b.value)
    if b.kind == UNARY and b.name == "neg":
        return sub(a, b.args[0])
    return binary("add", a, b)


def sub(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.is_zero:
        return a
    if a is b:
        return ZERO
    if a.is_zero:
        return neg(b)
    if a.kind == CONST and b.kind == CONST:
        return const(a.value - b.value)
    if b.kind == UNARY and b.name == "neg":
        return add(a, b.args[0])
    return binary("sub", a, b)


def mul(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if a.is_zero or b.is_zero:
        return ZERO
    if a.is_number(1.0):
        return b
    if b.is_number(1.0):
        return a
    if a.kind == CONST and b.kind == CONST:
        return const(a.value * b.value)
    if a.is_number(-1.0):
        return neg(b)
    if b.is_number(-1.0):
        return neg(a)
    if b.kind == CONST:
        a, b = b, a  # constant factor first
    return binary("mul", a, b)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.is_zero:
        raise ZeroDivisionError("symbolic division by the zero constant")
    if a.is_zero:
        return ZERO
    if b.is_number(1.0):
        return a
    if a is b:
        return ONE
    if a.kind == CONST and b.kind == CONST:
        return const(a.value / b.value)
    if b.kind == CONST:
        return mul(1.0 / b.value, a)
    return binary("div", a, b)


def power(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.is_zero:
        return ONE
    if b.is_number(1.0):
        return a
    if a.is_number(1.0):
        return ONE
    if a.kind == CONST and b.kind == CONST:
        try:
            val = math.pow(a.value, b.value)
        except (ValueError, OverflowError):
            val = None
        if val is not None and math.isfinite(val):
            return const(val)
    return binary("pow", a, b)


def neg(a) -> Expr:
    a = as_expr(a)
    if a.kind == CONST:
        return const(-a.value)
    if a.kind == UNARY and a.name == "neg":
        return a.args[0]
    if a.kind == BINARY and a.name == "sub":
        return binary("sub", a.args[1], a.args[0])
    return unary("neg", a)


_FOLD = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": lambda x: math.log(x) if x > 0 else None,
    "sqrt": lambda x: math.sqrt(x) if x >= 0 else None,
    "abs": abs,
}


def apply(op: str, a) -> Expr:
    """Apply a named unary function, folding constants where defined."""
    a = as_expr(a)
    if op == "neg":
        return neg(a)
    if a.kind == CONST:
        try:
            val = _FOLD[op](a.value)
        except OverflowError:
            val = None
        if val is not None and math.isfinite(val):
            return const(val)
    return unary(op, a)


def sin(a):
    return apply("sin", a)


def cos(a):
    return apply("cos", a)


def exp(a):
    return apply("exp", a)


def ln(a):
    return apply("ln", a)


def sqrt(a):
    return apply("sqrt", a)


def absolute(a):
    return apply("abs", a)


def total(items: Iterable) -> Expr:
    """Left-folded sum of an iterable of expressions/numbers."""
    acc = ZERO
    for item in items:
        acc = add(acc, item)
    return acc


# -- matrix inverse entries --------------------------------------------------

def inverse_entry(entries: tuple, size: int, i: int, j: int) -> Expr:
    """Entry (i, j) of the inverse of a size x size matrix of expressions.

    ``entries`` is the row-major flattening.  Evaluation inverts the block
    numerically per point; differentiation uses d(A^-1) = -A^-1 dA A^-1.
    """
    if len(entries) != size * size:
        raise ValueError("entries do not match matrix size")
    return make(INV, name=f"{size}:{i}:{j}", args=tuple(as_expr(e) for e in entries))


def inverse_index(node: Expr) -> tuple[int, int, int]:
    size, i, j = (int(t) for t in node.name.split(":"))
    return size, i, j


def postorder(roots: Iterable[Expr], stop=None) -> list[Expr]:
    """Children-before-parents ordering of every node reachable from roots.

    Nodes for which ``stop(node)`` is true are emitted but not expanded.
    """
    seen: set[int] = set()
    order: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(r, False) for r in reversed(list(roots))]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        if stop is not None and stop(node):
            continue
        for child in reversed(node.args):
            if id(child) not in seen:
                stack.append((child, False))
    return order


def free_names(e: Expr) -> tuple[set[str], set[str]]:
    """Coordinate and parameter names occurring in ``e``."""
    coords, params = set(), set()
    for node in postorder([e]):
        if node.kind == COORD:
            coords.add(node.name)
        elif node.kind == PARAM:
            params.add(node.name)
    return coords, params


def depends_on(e: Expr, name: str) -> bool:
    return name in free_names(e)[0]


def count_nodes(roots: Iterable[Expr]) -> int:
    return len(postorder(roots))
