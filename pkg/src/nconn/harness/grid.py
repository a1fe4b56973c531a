"""Evaluation grids: tensor products of coordinate axes or seeded random samples."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..geometry.chart import SplitChart
from .model import InputError

DEFAULT_POINTS = 17
SAMPLINGS = ("tensor", "random")


@dataclass
class Axis:
    name: str
    lo: float
    hi: float
    points: int          # 1 with lo == hi for a fixed coordinate
    fixed: bool = False

    def values(self) -> np.ndarray:
        if self.fixed:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.points)

    def describe(self):
        if self.fixed:
            return self.lo
        return {"range": [self.lo, self.hi], "points": self.points}


@dataclass
class Grid:
    axes: list           # in chart coordinate order
    sampling: str = "tensor"
    random_points: int = 0
    seed: int = 0

    @property
    def npoints(self) -> int:
        if self.sampling == "random":
            return self.random_points
        n = 1
        for ax in self.axes:
            n *= 1 if ax.fixed else ax.points
        return n

    def coordinates(self) -> dict:
        """Coordinate name -> flat array over all points (C order over axes)."""
        if self.sampling == "random":
            rng = np.random.default_rng(self.seed)
            return {ax.name: (np.full(self.random_points, ax.lo) if ax.fixed
                              else rng.uniform(ax.lo, ax.hi, self.random_points))
                    for ax in self.axes}
        mesh = np.meshgrid(*[ax.values() for ax in self.axes], indexing="ij")
        return {ax.name: m.ravel() for ax, m in zip(self.axes, mesh)}

    def env(self, params: Mapping[str, float]) -> dict:
        env = self.coordinates()
        env.update({k: float(v) for k, v in params.items()})
        return env

    def describe(self) -> dict:
        out = {"sampling": self.sampling, "points": self.npoints,
               "axes": {ax.name: ax.describe() for ax in self.axes}}
        if self.sampling == "random":
            out["seed"] = self.seed
        return out


def _axis_from_json(name: str, spec) -> Axis:
    if isinstance(spec, (int, float)):
        return Axis(name, float(spec), float(spec), 1, True)
    lo, hi = (float(x) for x in spec["range"])
    return Axis(name, lo, hi, int(spec.get("points", DEFAULT_POINTS)))


def parse_grid_spec(text: str) -> dict:
    """``x2=-1:1:17,v=0.5:1.5,x1=0,random=200`` -> {name: Axis | int}."""
    out: dict = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, rhs = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise InputError("grid", f"bad grid item {item!r} (want name=lo:hi[:n] or name=value)")
        try:
            if name == "random":
                out["random"] = int(rhs)
                if out["random"] < 0:
                    raise ValueError
                continue
            parts = rhs.split(":")
            if len(parts) == 1:
                out[name] = Axis(name, float(parts[0]), float(parts[0]), 1, True)
            elif len(parts) in (2, 3):
                n = int(parts[2]) if len(parts) == 3 else DEFAULT_POINTS
                if n < 0:
                    raise ValueError
                out[name] = Axis(name, float(parts[0]), float(parts[1]), n)
            else:
                raise ValueError
        except ValueError:
            raise InputError("grid", f"bad grid item {item!r}") from None
    return out


def build_grid(chart: SplitChart, spec: Optional[Mapping] = None, override: Optional[str] = None,
               seed: int = 0) -> Grid:
    """Merge the model's grid section with a command-line override.

    Coordinates mentioned nowhere are fixed at 0.
    """
    spec = spec or {}
    axes = {name: _axis_from_json(name, s) for name, s in spec.get("axes", {}).items()}
    sampling = spec.get("sampling", "tensor")
    npts = int(spec.get("random_points", 0))
    if override:
        for name, ax in parse_grid_spec(override).items():
            if name == "random":
                sampling, npts = "random", ax
            else:
                axes[name] = ax
    unknown = sorted(set(axes) - set(chart.coords))
    if unknown:
        raise InputError("grid", f"grid names {unknown} are not chart coordinates {chart.coords}")
    ordered = [axes.get(c, Axis(c, 0.0, 0.0, 1, True)) for c in chart.coords]
    return Grid(ordered, sampling, npts, seed)
