"""Seeded generators for random models, ansaetze and evaluation points."""
from __future__ import annotations

from typing import Mapping, Optional, Sequence

import numpy as np

from .ansatz5d import Ansatz5D
from .geometry.chart import SplitChart
from .geometry.metric import DMetric, NConnection


def _c(rng, lo=-0.3, hi=0.3) -> str:
    return f"{rng.uniform(lo, hi):.4f}"


def random_poly(rng: np.random.Generator, names: Sequence[str], scale: float = 0.3) -> str:
    """Linear terms in every name plus one quadratic cross term."""
    terms = [f"{_c(rng, -scale, scale)}*{v}" for v in names]
    a, b = rng.choice(list(names), 2)
    terms.append(f"{_c(rng, -scale, scale)}*{a}*{b}")
    return " + ".join(terms)


def random_model(rng: np.random.Generator, n: int = 3, m: int = 2,
                 diagonal: bool = False) -> tuple[DMetric, NConnection]:
    """Smooth (g, h, N) with diagonally dominant blocks on the unit cube."""
    chart = SplitChart(tuple(f"x{i + 1}" for i in range(n)),
                       tuple(f"y{n + a + 1}" for a in range(m)))
    X = chart.coords

    def block(k):
        t = [["0"] * k for _ in range(k)]
        for r in range(k):
            t[r][r] = f"2 + {random_poly(rng, X)} + 0.1*exp({_c(rng)}*{X[rng.integers(len(X))]})"
            for c in range(r + 1, k):
                if not diagonal:
                    t[r][c] = t[c][r] = f"0.1*({random_poly(rng, X)})"
        return t

    g = DMetric(chart, block(n), block(m), check=False)
    N = NConnection(chart, [[random_poly(rng, X) for _ in range(m)] for _ in range(n)])
    return g, N


def random_ansatz(rng: np.random.Generator, g1: int = 1) -> Ansatz5D:
    """Generic ansatz with h4* != 0 and h5* != 0 on the sampling box."""
    xv = ["x2", "x3", "v"]
    g2 = f"1.5 + {_c(rng, 0.05, 0.3)}*x2^2 + {_c(rng)}*x3 + 0.1*sin({_c(rng, 0.2, 1)}*x2*x3)"
    g3 = f"exp({_c(rng)}*x2 + {_c(rng)}*x3^2)"
    h4 = f"{_c(rng, 1, 2)} + {_c(rng, 0.3, 0.6)}*exp({_c(rng, 0.5, 1)}*v + {_c(rng)}*x2)"
    h5 = (f"{_c(rng, 0.5, 1)}*exp({_c(rng, 0.4, 0.9)}*v + {_c(rng)}*x3 + {_c(rng)}*x2)"
          f" + {_c(rng, 0.2, 0.5)}*v")
    w = [f"{random_poly(rng, xv)} + 0.1*sin(v*x{i + 1})" for i in range(3)]
    n = [f"{random_poly(rng, xv)} + 0.05*v^3" for _ in range(3)]
    return Ansatz5D.from_strings(g2, g3, h4, h5, w, n, g1)


def sample_points(rng: np.random.Generator, chart: SplitChart, npts: int,
                  ranges: Optional[Mapping[str, tuple]] = None) -> dict:
    """Uniform random points; default range [-1, 1] per coordinate."""
    ranges = ranges or {}
    return {c: rng.uniform(*ranges.get(c, (-1.0, 1.0)), npts) for c in chart.coords}
