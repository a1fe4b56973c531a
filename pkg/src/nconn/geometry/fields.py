"""Indexed tables of expressions (connection, torsion, curvature components)."""
from __future__ import annotations

import itertools
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from ..expr import nodes as nd
from ..expr.evaluate import Evaluation, Program
from ..expr.parser import to_string
from ..expr.simplify import simplify
from .chart import SplitChart


def zeros(shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr.fill(nd.ZERO)
    return arr


class ComponentField:
    """Dense table of expressions with an index signature.

    ``slots`` is a sequence of (range, position) pairs: range is ``"h"``,
    ``"v"`` or ``"f"`` (full), position is ``"u"`` or ``"d"``.  Entries are
    addressed with 0-based indices local to each slot's range.
    """

    def __init__(self, name: str, chart: SplitChart, slots: Sequence[str], data: np.ndarray):
        self.name = name
        self.chart = chart
        self.slots = tuple(slots)
        for s in self.slots:
            if len(s) != 2 or s[0] not in "hvf" or s[1] not in "ud":
                raise ValueError(f"bad slot spec {s!r}")
        expect = tuple(self._extent(s[0]) for s in self.slots)
        data = np.asarray(data, dtype=object)
        if data.shape != expect:
            raise ValueError(f"{name}: table shape {data.shape} != {expect}")
        self.data = data

    def _extent(self, r: str) -> int:
        return {"h": self.chart.n, "v": self.chart.m, "f": self.chart.dim}[r]

    @classmethod
    def full(cls, name: str, chart: SplitChart, pattern: str, data=None) -> "ComponentField":
        slots = ["f" + p for p in pattern]
        if data is None:
            data = zeros((chart.dim,) * len(pattern))
        return cls(name, chart, slots, data)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __getitem__(self, idx):
        return self.data[idx]

    def indices(self) -> Iterator[tuple]:
        return itertools.product(*(range(k) for k in self.shape))

    def items(self, nonzero: bool = True):
        for idx in self.indices():
            e = self.data[idx]
            if nonzero and e.is_zero:
                continue
            yield idx, e

    def map(self, fn: Callable, name: Optional[str] = None) -> "ComponentField":
        out = np.empty(self.shape, dtype=object)
        for idx in self.indices():
            out[idx] = fn(self.data[idx])
        return ComponentField(name or self.name, self.chart, self.slots, out)

    def simplified(self) -> "ComponentField":
        return self.map(simplify)

    def label(self, idx: tuple) -> str:
        """Dump key, e.g. ``R^4_-2-3-4`` (1-based chart positions)."""
        up, down = [], []
        for (r, pos), i in zip(self.slots, idx):
            k = i + 1 + (self.chart.n if r == "v" else 0)
            (up if pos == "u" else down).append(k)
        key = self.name + "".join(f"^{k}" for k in up)
        if down:
            key += "_" + "".join(f"-{k}" for k in down)
        return key

    def __sub__(self, other: "ComponentField") -> "ComponentField":
        if self.shape != other.shape:
            raise ValueError("component fields have different shapes")
        out = np.empty(self.shape, dtype=object)
        for idx in self.indices():
            out[idx] = nd.sub(self.data[idx], other.data[idx])
        return ComponentField(self.name, self.chart, self.slots, out)

    def __add__(self, other: "ComponentField") -> "ComponentField":
        if self.shape != other.shape:
            raise ValueError("component fields have different shapes")
        out = np.empty(self.shape, dtype=object)
        for idx in self.indices():
            out[idx] = nd.add(self.data[idx], other.data[idx])
        return ComponentField(self.name, self.chart, self.slots, out)

    def __neg__(self) -> "ComponentField":
        return self.map(nd.neg)

    # -- numerics ----------------------------------------------------------
    def evaluate(self, env: Mapping[str, object], jobs=None) -> tuple[np.ndarray, Evaluation]:
        """Values with shape ``self.shape + (npoints,)``; NaN where undefined."""
        idxs = list(self.indices())
        prog = Program([self.data[i] for i in idxs])
        res = prog.evaluate(env, jobs=jobs)
        out = res.values.reshape(self.shape + (res.values.shape[1],))
        return out, res

    def dump(self, points: Optional[Sequence[Mapping[str, float]]] = None,
             nonzero: bool = True) -> dict:
        entries = {}
        pairs = list(self.items(nonzero))
        values = None
        if points:
            env = {k: [float(p[k]) for p in points] for k in points[0]}
            prog = Program([e for _, e in pairs])
            values = prog.evaluate(env, jobs=1).values
        for r, (idx, e) in enumerate(pairs):
            item = {"expr": to_string(e)}
            if values is not None:
                item["values"] = [None if not np.isfinite(x) else float(x) for x in values[r]]
            entries[self.label(idx)] = item
        return entries


def evaluate_fields(fields: Sequence[ComponentField], env, jobs=None) -> list[np.ndarray]:
    """Evaluate several fields in one pass, sharing common subexpressions."""
    roots, spans = [], []
    for f in fields:
        start = len(roots)
        roots.extend(f.data[i] for i in f.indices())
        spans.append((start, len(roots), f.shape))
    res = Program(roots).evaluate(env, jobs=jobs)
    vals = res.values
    return [vals[s:e].reshape(shape + (vals.shape[1],)) for s, e, shape in spans]
