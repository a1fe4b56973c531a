"""Named geometric objects a model can ask the ``geometry`` command to dump."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..geometry import (ComponentField, anholonomy, canonical_dconnection, curvature, einstein,
                        levi_civita, nonmetricity, omega, raise_first, ricci, scalar, torsion)

NAMES = ("metric", "nconnection", "omega", "anholonomy", "connection", "levi_civita",
         "torsion", "nonmetricity", "curvature", "ricci", "scalar", "einstein")
DEFAULT = ("metric", "nconnection", "connection", "torsion", "ricci", "einstein")


class _Lazy:
    """Objects of the canonical d-connection, built on first use."""

    def __init__(self, g, N):
        self.g, self.N = g, N
        self._cache: dict = {}

    def get(self, key: str):
        if key not in self._cache:
            self._cache[key] = getattr(self, "_" + key)()
        return self._cache[key]

    def _W(self):
        return anholonomy(self.N)

    def _conn(self):
        return canonical_dconnection(self.g, self.N)

    def _R(self):
        return curvature(self.get("conn"), self.N, self.get("W"), blocks=False)

    def _Ric(self):
        return ricci(self.get("R"))

    def _scalar(self):
        return scalar(self.get("Ric"), self.g)

    def field(self, name: str) -> ComponentField:
        g, N, ch = self.g, self.N, self.g.chart
        if name == "metric":
            return ComponentField.full("g", ch, "dd", g.full_block())
        if name == "nconnection":
            return ComponentField("N", ch, ("hd", "vu"), N.table)
        if name == "omega":
            return ComponentField("Omega", ch, ("vu", "hd", "hd"), omega(N))
        if name == "anholonomy":
            return self.get("W")
        if name == "connection":
            return self.get("conn").full()
        if name == "levi_civita":
            return levi_civita(g, N, self.get("W")).map(lambda e: e, "LC")
        if name == "torsion":
            return torsion(self.get("conn"), N, self.get("W")).full
        if name == "nonmetricity":
            return nonmetricity(self.get("conn"), g, N)
        if name == "curvature":
            return self.get("R").full
        if name == "ricci":
            return self.get("Ric")
        if name == "scalar":
            cell = np.empty((), dtype=object)
            cell[()] = self.get("scalar")
            return ComponentField("Rs", ch, (), cell)
        if name == "einstein":
            return raise_first(einstein(self.get("Ric"), self.get("scalar"), g), g, "G")
        raise KeyError(name)


def compute(model, names: Sequence[str]) -> list:
    """Component fields for ``names`` (canonical d-connection unless named otherwise)."""
    g, N = model.geometry()
    lazy = _Lazy(g, N)
    return [lazy.field(n) for n in names]
