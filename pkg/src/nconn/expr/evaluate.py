"""Vectorized double-precision evaluation of expression DAGs.

A :class:`Program` linearizes any number of root expressions into one
topologically ordered node list, so shared subexpressions are evaluated
once per batch of points.  Points where a node is undefined (division by
zero, logarithm of a non-positive number, ...) come back as NaN together
with a record of the offending node.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import nodes as nd
from .nodes import BINARY, CONST, COORD, INV, PARAM, UNARY, Expr

DET_FLOOR = 1e-12

_UFUNC = {
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
}


class DomainError(ArithmeticError):
    """An expression is undefined at an evaluation point."""

    def __init__(self, node: Expr, reason: str, point: Optional[Mapping] = None):
        self.node = node
        self.reason = reason
        self.point = point
        super().__init__(f"{reason} at node {_describe(node)}"
                         + (f" for point {dict(point)}" if point else ""))


def _describe(node: Expr) -> str:
    from .parser import to_string

    text = to_string(node)
    return text if len(text) <= 120 else text[:117] + "..."


def _reason(node: Expr) -> str:
    if node.kind == BINARY:
        return {"div": "division by zero", "pow": "invalid power"}.get(node.name, "non-finite value")
    if node.kind == UNARY:
        return {"ln": "logarithm of non-positive value", "sqrt": "square root of negative value",
                "exp": "overflow", "abs": "non-finite value"}.get(node.name, "non-finite value")
    if node.kind == INV:
        return f"singular matrix block (|det| < {DET_FLOOR:g})"
    return "non-finite value"


def default_jobs() -> int:
    env = os.environ.get("NCONN_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class Evaluation:
    """Values of every root over a batch of points.

    ``values`` has shape (len(roots), npoints); ``errors`` maps a root index
    to a list of (point index, offending node, reason).
    """

    values: np.ndarray
    bad: np.ndarray  # bool (len(roots), npoints)
    errors: dict = field(default_factory=dict)

    def error_points(self) -> np.ndarray:
        return self.bad.any(axis=0)


class Program:
    """Compiled evaluation plan for a list of root expressions."""

    def __init__(self, roots: Sequence[Expr]):
        self.roots = [nd.as_expr(r) for r in roots]
        self.order = nd.postorder(self.roots)
        self.index = {node: k for k, node in enumerate(self.order)}
        self.root_index = [self.index[r] for r in self.roots]
        self.coords = sorted({n.name for n in self.order if n.kind == COORD})
        self.params = sorted({n.name for n in self.order if n.kind == PARAM})

    def __len__(self):
        return len(self.order)

    # -- core pass ---------------------------------------------------------
    def _run(self, env: Mapping[str, np.ndarray], npts: int) -> list:
        vals: list = [None] * len(self.order)
        index = self.index
        inv_cache: dict = {}
        with np.errstate(all="ignore"):
            for k, node in enumerate(self.order):
                kind = node.kind
                if kind == CONST:
                    vals[k] = node.value
                elif kind == COORD or kind == PARAM:
                    try:
                        vals[k] = env[node.name]
                    except KeyError:
                        raise KeyError(f"no value supplied for {kind} {node.name!r}") from None
                elif kind == BINARY:
                    a = vals[index[node.args[0]]]
                    b = vals[index[node.args[1]]]
                    op = node.name
                    if op == "add":
                        vals[k] = a + b
                    elif op == "sub":
                        vals[k] = a - b
                    elif op == "mul":
                        vals[k] = a * b
                    elif op == "div":
                        r = np.true_divide(a, b)
                        vals[k] = np.where(np.asarray(b) == 0.0, np.nan, r)
                    else:
                        vals[k] = _pow(a, b, node)
                elif kind == UNARY:
                    a = vals[index[node.args[0]]]
                    op = node.name
                    if op == "ln":
                        a = np.asarray(a, dtype=float)
                        vals[k] = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
                    elif op == "sqrt":
                        a = np.asarray(a, dtype=float)
                        vals[k] = np.where(a >= 0, np.sqrt(np.where(a >= 0, a, 0.0)), np.nan)
                    else:
                        vals[k] = _UFUNC[op](a)
                elif kind == INV:
                    vals[k] = _inverse_entry(node, vals, index, npts, inv_cache)
                else:  # pragma: no cover
                    raise AssertionError(kind)
        return vals

    def evaluate(self, env: Mapping[str, object], npts: Optional[int] = None,
                 jobs: Optional[int] = None, chunk: int = 4096) -> Evaluation:
        """Evaluate all roots.

        ``env`` maps coordinate and parameter names to scalars or 1-D arrays
        of a common length.
        """
        arrays = {}
        for key, val in env.items():
            arr = np.asarray(val, dtype=float)
            arrays[key] = arr
            if arr.ndim == 1:
                npts = arr.shape[0] if npts is None else npts
                if arr.shape[0] != npts:
                    raise ValueError("inconsistent point counts in environment")
        if npts is None:
            npts = 1
        arrays = {k: (np.full(npts, v, dtype=float) if np.ndim(v) == 0 else v)
                  for k, v in arrays.items()}
        jobs = default_jobs() if jobs is None else max(1, int(jobs))
        if npts == 0:
            return Evaluation(np.zeros((len(self.roots), 0)), np.zeros((len(self.roots), 0), bool))
        bounds = [(s, min(s + chunk, npts)) for s in range(0, npts, chunk)]

        def work(bound):
            s, e = bound
            sub_env = {k: v[s:e] for k, v in arrays.items()}
            vals = self._run(sub_env, e - s)
            return self._collect(vals, e - s, offset=s)

        if jobs > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                parts = list(pool.map(work, bounds))
        else:
            parts = [work(b) for b in bounds]
        values = np.concatenate([p[0] for p in parts], axis=1)
        bad = np.concatenate([p[1] for p in parts], axis=1)
        errors: dict = {}
        for p in parts:
            for r, errs in p[2].items():
                errors.setdefault(r, []).extend(errs)
        return Evaluation(values, bad, errors)

    def _collect(self, vals: list, npts: int, offset: int):
        out = np.empty((len(self.roots), npts))
        for r, k in enumerate(self.root_index):
            out[r] = np.broadcast_to(np.asarray(vals[k], dtype=float), (npts,))
        bad = ~np.isfinite(out)
        errors: dict = {}
        if bad.any():
            culprit = self._locate(vals, npts)
            for r in np.nonzero(bad.any(axis=1))[0]:
                suspects = [n for n in nd.postorder([self.roots[r]]) if n in culprit]
                errs = []
                for p in np.nonzero(bad[r])[0]:
                    node = next((n for n in suspects if culprit[n][p]), self.roots[r])
                    errs.append((int(p) + offset, node, _reason(node)))
                errors[int(r)] = errs
        out[bad] = np.nan
        return out, bad, errors

    def _locate(self, vals: list, npts: int) -> dict:
        """Nodes whose own operation produced a non-finite value from finite inputs."""
        culprit = {}
        index = self.index
        for k, node in enumerate(self.order):
            if node.kind in (CONST, COORD, PARAM):
                continue
            v = np.broadcast_to(np.asarray(vals[k], dtype=float), (npts,))
            nonfinite = ~np.isfinite(v)
            if not nonfinite.any():
                continue
            inputs_ok = np.ones(npts, bool)
            for child in node.args:
                cv = np.broadcast_to(np.asarray(vals[index[child]], dtype=float), (npts,))
                inputs_ok &= np.isfinite(cv)
            own = nonfinite & inputs_ok
            if own.any():
                culprit[node] = own
        return culprit

    # -- convenience -------------------------------------------------------
    def __call__(self, env, **kw) -> np.ndarray:
        return self.evaluate(env, **kw).values

    def point_values(self, env: Mapping[str, float]) -> list:
        """Root values at one point given as scalars, without error bookkeeping.

        Undefined values come back as NaN; meant for tight loops such as ODE
        right-hand sides.
        """
        vals = self._run(env, 1)
        return [float(np.asarray(vals[k]).reshape(-1)[0]) for k in self.root_index]


def _pow(a, b, node: Expr):
    b_arr = np.asarray(b, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    if b_arr.ndim == 0:
        bv = float(b_arr)
        if bv.is_integer() and abs(bv) <= 64:
            r = np.power(a_arr, bv)
            if bv < 0:
                r = np.where(a_arr == 0.0, np.nan, r)
            return r
        r = np.power(a_arr, bv)
        invalid = (a_arr < 0) | ((a_arr == 0.0) & (bv < 0))
        return np.where(invalid, np.nan, r)
    r = np.power(a_arr, b_arr)
    integral = np.equal(np.mod(b_arr, 1.0), 0.0)
    invalid = ((a_arr < 0) & ~integral) | ((a_arr == 0.0) & (b_arr < 0))
    return np.where(invalid, np.nan, r)


def _inverse_entry(node: Expr, vals: list, index: dict, npts: int, cache: dict):
    size, i, j = nd.inverse_index(node)
    key = node.args
    inv = cache.get(key)
    if inv is None:
        mats = np.empty((npts, size, size))
        for r in range(size):
            for c in range(size):
                mats[:, r, c] = np.broadcast_to(
                    np.asarray(vals[index[node.args[r * size + c]]], dtype=float), (npts,))
        det = np.linalg.det(mats)
        ok = np.isfinite(det) & (np.abs(det) >= DET_FLOOR)
        inv = np.full_like(mats, np.nan)
        if ok.any():
            inv[ok] = np.linalg.inv(mats[ok])
        cache[key] = inv
    return inv[:, i, j]


def compile_program(roots: Iterable[Expr]) -> Program:
    return Program(list(roots))


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate one expression at one point; raises DomainError if undefined."""
    prog = Program([e])
    res = prog.evaluate({k: [float(v)] for k, v in point.items()}, npts=1, jobs=1)
    if res.bad[0, 0]:
        _, node, reason = res.errors[0][0]
        raise DomainError(node, reason, point)
    return float(res.values[0, 0])


def evaluate_many(exprs: Sequence[Expr], env: Mapping[str, object], jobs=None) -> Evaluation:
    return Program(list(exprs)).evaluate(env, jobs=jobs)


def isclose_rel(a: float, b: float, tol: float, floor: float = 1e-30) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), floor)


__all__ = ["DomainError", "Evaluation", "Program", "compile_program", "evaluate",
           "evaluate_many", "default_jobs", "isclose_rel", "DET_FLOOR"]
