"""Split charts and evaluation points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..expr import nodes as nd


@dataclass(frozen=True)
class SplitChart:
    """An (n+m)-dimensional chart with horizontal and vertical coordinates.

    Indices are 0-based throughout the API; component labels and dumps use
    1-based positions in the combined list ``h + v``.
    """

    h: tuple
    v: tuple
    signature: tuple = ()
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "v", tuple(self.v))
        object.__setattr__(self, "params", tuple(self.params))
        sig = tuple(int(s) for s in self.signature) or (1,) * (len(self.h) + len(self.v))
        object.__setattr__(self, "signature", sig)
        if not self.h or not self.v:
            raise ValueError("a split chart needs n >= 1 and m >= 1")
        names = self.h + self.v
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        if set(names) & set(self.params):
            raise ValueError("parameter names collide with coordinates")
        if len(sig) != len(names) or any(s not in (1, -1) for s in sig):
            raise ValueError("signature must give +1/-1 per coordinate")

    @property
    def n(self) -> int:
        return len(self.h)

    @property
    def m(self) -> int:
        return len(self.v)

    @property
    def dim(self) -> int:
        return len(self.h) + len(self.v)

    @property
    def coords(self) -> tuple:
        return self.h + self.v

    def symbol(self, alpha: int):
        return nd.coord(self.coords[alpha])

    def is_h(self, alpha: int) -> bool:
        return alpha < self.n

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a coordinate of this chart") from None

    def with_params(self, params: Sequence[str]) -> "SplitChart":
        return SplitChart(self.h, self.v, self.signature, tuple(params))


def five_d_chart(params: Sequence[str] = (), g1: int = 1) -> SplitChart:
    """The 5D chart (x1, x2, x3 | v, y5) used by the off-diagonal ansatz."""
    return SplitChart(("x1", "x2", "x3"), ("v", "y5"), (g1, 1, 1, 1, 1), tuple(params))


@dataclass(frozen=True)
class Point:
    coords: Mapping[str, float]
    params: Mapping[str, float] = field(default_factory=dict)

    def check(self, chart: SplitChart) -> "Point":
        missing = [c for c in chart.coords if c not in self.coords]
        if missing:
            raise ValueError(f"point is missing coordinates {missing}")
        for k, val in {**self.coords, **self.params}.items():
            if not math.isfinite(float(val)):
                raise ValueError(f"non-finite value for {k!r}")
        return self

    def env(self) -> dict:
        return {**{k: float(x) for k, x in self.coords.items()},
                **{k: float(x) for k, x in self.params.items()}}
