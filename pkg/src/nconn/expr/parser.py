"""Tokenizer, precedence-climbing parser and printer for the expression grammar.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;            (* right associative *)
    atom    = number | ident | ident , "(" , expr , ")" | "(" , expr , ")" ;
    number  = digits , [ "." , [digits] ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent= ("e" | "E") , [ "+" | "-" ] , digits ;
    ident   = letter , { letter | digit | "_" } ;

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  A unary
minus applied directly to a numeric literal folds into a negative constant.
Functions: sin, cos, exp, ln, sqrt, abs.
"""
from __future__ import annotations

import re
from typing import Iterable, Optional

from . import nodes as nd
from .nodes import BINARY, CONST, COORD, INV, PARAM, UNARY, Expr

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "abs")


class ExpressionError(ValueError):
    """Base class for expression-language input errors."""


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, offset: int, known: Iterable[str] = ()):
        self.name = name
        self.offset = offset
        known = sorted(known)
        super().__init__(
            f"unknown identifier {name!r} at offset {offset}"
            + (f" (known: {', '.join(known)})" if known else "")
        )


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad), text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: set[str], params: set[str]):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.coords = coords
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        if tok[0] == "end":
            message = f"{message} (unexpected end of input)"
        else:
            message = f"{message} (found {tok[1]!r})"
        raise ParseError(message, tok[2], self.text)

    def expect(self, value: str):
        tok = self.next()
        if tok[0] != "op" or tok[1] != value:
            self.i -= 1
            self.error(f"expected {value!r}")

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.error("unexpected token")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            right = self.term()
            left = nd.binary("add" if op == "+" else "sub", left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.next()[1]
            right = self.unary()
            left = nd.binary("mul" if op == "*" else "div", left, right)
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.next()
            operand = self.unary()
            if operand.kind == CONST:
                return nd.const(-operand.value)
            return nd.unary("neg", operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.next()
            return nd.binary("pow", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.next()
        kind, value, offset = tok
        if kind == "num":
            return nd.const(float(value))
        if kind == "ident":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownIdentifierError(value, offset, FUNCTIONS)
                self.next()
                arg = self.expr()
                self.expect(")")
                return nd.unary(value, arg)
            if value in self.coords:
                return nd.coord(value)
            if value in self.params:
                return nd.param(value)
            if value in FUNCTIONS:
                self.i -= 1
                self.error(f"function {value!r} requires an argument list")
            raise UnknownIdentifierError(value, offset, set(self.coords) | set(self.params))
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.i -= 1
        self.error("expected a number, identifier or '('")


def parse(text: str, chart=None, *, coords: Optional[Iterable[str]] = None,
          params: Optional[Iterable[str]] = None) -> Expr:
    """Parse ``text`` into an Expression.

    Identifiers resolve against the chart coordinates (``chart.coords``) and
    declared parameters (``chart.params``); explicit ``coords``/``params``
    override or extend those.
    """
    cset = set(coords or ())
    pset = set(params or ())
    if chart is not None:
        cset |= set(chart.coords)
        pset |= set(getattr(chart, "params", ()))
    return _Parser(text, cset, pset).parse()


# -- printing ----------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_ATOM = 5


def format_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_string(e: Expr) -> str:
    """Render an expression so that ``parse(to_string(e))`` rebuilds ``e``."""
    out: dict[Expr, tuple[str, int]] = {}
    for node in nd.postorder([e]):
        kind = node.kind
        if kind == CONST:
            text = format_number(node.value)
            out[node] = (text, 3 if node.value < 0 else _ATOM)
        elif kind in (COORD, PARAM):
            out[node] = (node.name, _ATOM)
        elif kind == UNARY:
            arg, aprec = out[node.args[0]]
            if node.name == "neg":
                if aprec < 3:
                    arg = f"({arg})"
                elif node.args[0].kind == CONST:
                    arg = f"({arg})"
                out[node] = ("-" + arg, 3)
            else:
                out[node] = (f"{node.name}({arg})", _ATOM)
        elif kind == BINARY:
            op = node.name
            p = _PREC[op]
            (ls, lp), (rs, rp) = out[node.args[0]], out[node.args[1]]
            if op == "pow":
                if lp <= 4:
                    ls = f"({ls})"
                if rp < 3:
                    rs = f"({rs})"
                out[node] = (f"{ls}^{rs}", p)
            else:
                if lp < p:
                    ls = f"({ls})"
                if rp <= p:
                    rs = f"({rs})"
                out[node] = (f"{ls} {_SYM[op]} {rs}" if p == 1 else f"{ls}*{rs}" if op == "mul"
                             else f"{ls}/{rs}", p)
        elif kind == INV:
            size, i, j = nd.inverse_index(node)
            body = ", ".join(out[a][0] for a in node.args)
            out[node] = (f"inverse[{size}]({i},{j}; {body})", _ATOM)
        else:  # pragma: no cover
            raise AssertionError(kind)
    return out[e][0]
