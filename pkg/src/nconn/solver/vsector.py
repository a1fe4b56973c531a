"""The (v, y5) block: vacuum closed form and the ray-by-ray ODE branch.

The governing equation R^4_4 = -Upsilon2 reads

    h5** = h5* [ln sqrt|h4 h5|]* + 2 h4 h5 Upsilon2
         = (h5*/2) (h4*/h4 + h5*/h5) + 2 h4 h5 Upsilon2.

For Upsilon2 = 0 it integrates once to h5* = c sqrt|h4 h5|, hence
h4 = h0^2 [(sqrt|h5|)*]^2.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..expr import nodes as nd
from ..expr.calculus import diff
from ..expr.evaluate import Program, default_jobs
from ..expr.nodes import Expr
from ..expr.simplify import simplify
from .rk import StepSizeUnderflow, integrate

ATOL = 1e-10
RTOL = 1e-9
# rays stop once |h5| drops below this fraction of |h5(v0)| or h5 changes sign
H5_FLOOR = 1e-10


class PreconditionError(ValueError):
    """Input data violates a solver precondition."""


class RayError(ArithmeticError):
    """Integration along one ray failed."""

    def __init__(self, ray: int, coords: Mapping[str, float], cause: str):
        self.ray, self.coords, self.cause = ray, dict(coords), cause
        where = ", ".join(f"{k}={v:.6g}" for k, v in sorted(self.coords.items()))
        super().__init__(f"ray {ray} ({where}): {cause}")


def v_equation_rhs(h4: Expr, h5: Expr, upsilon2: Expr) -> Expr:
    """Right-hand side of h5** for symbolic h4, h5."""
    h4s, h5s = diff(h4, "v"), diff(h5, "v")
    return nd.add(h5s / 2 * nd.add(h4s / h4, h5s / h5), 2 * h4 * h5 * upsilon2)


def vacuum_h4(h5: Expr, h0: Expr = nd.ONE) -> Expr:
    """h4 = h0^2 [(sqrt|h5|)*]^2; requires h5* not identically zero."""
    h5s = simplify(diff(h5, "v"))
    if h5s.is_zero:
        raise PreconditionError("h5 does not depend on v (h5* = 0): vacuum branch undefined")
    if nd.depends_on(h0, "v") or nd.depends_on(h0, "y5"):
        raise PreconditionError("h0 may depend on horizontal coordinates only")
    root = nd.sqrt(nd.absolute(h5))
    return simplify(nd.power(h0, 2) * nd.power(diff(root, "v"), 2))


@dataclass
class RayTable:
    """h5 and h5* sampled along rays of fixed horizontal coordinates.

    ``h5[r, k]`` is the value on ray ``r`` at ``v[k]``; failed rays hold NaN
    and are listed in ``failures``.
    """

    v: np.ndarray
    rays: dict                   # coordinate name -> array (nrays,)
    h5: np.ndarray
    dh5: np.ndarray
    steps: np.ndarray
    failures: dict = field(default_factory=dict)   # ray -> message

    @property
    def nrays(self) -> int:
        return self.h5.shape[0]

    def ok(self) -> bool:
        return not self.failures


def _ray_system(h4: Expr, upsilon2: Expr):
    prog = Program([h4, simplify(diff(h4, "v")), upsilon2])

    def make(fixed: Mapping[str, float], h5_start: float):
        env = dict(fixed)
        sign = np.sign(h5_start)
        floor = H5_FLOOR * abs(h5_start)

        def f(t, y):
            h5, dh5 = y
            if not sign * h5 > floor:
                # the equation is singular at h5 = 0; refuse to cross it
                return np.array([np.nan, np.nan])
            env["v"] = t
            a, da, u = prog.point_values(env)
            return np.array([dh5, 0.5 * dh5 * (da / a + dh5 / h5) + 2.0 * a * h5 * u])

        return f

    return make


def integrate_h5(h4: Expr, upsilon2: Expr, h5_init: Expr, dh5_init: Expr,
                 v_values: Sequence[float], rays: Mapping[str, Sequence[float]],
                 v0: float = 0.0, atol: float = ATOL, rtol: float = RTOL,
                 jobs: Optional[int] = None, strict: bool = False) -> RayTable:
    """Integrate the v-equation for h5 given h4 and Upsilon2 on each ray.

    ``h5_init`` and ``dh5_init`` are h5(v0), h5*(v0) as expressions in the
    horizontal coordinates.  ``v_values`` may lie on both sides of ``v0``.
    Failed rays are recorded (or raised with ``strict``).
    """
    for name, e in (("h5_init", h5_init), ("dh5_init", dh5_init)):
        if nd.depends_on(e, "v"):
            raise PreconditionError(f"{name} must not depend on v")
    v_values = np.asarray(v_values, dtype=float)
    names = sorted(rays)
    cols = {k: np.asarray(rays[k], dtype=float) for k in names}
    nrays = len(next(iter(cols.values()))) if cols else 1
    init = Program([h5_init, dh5_init]).evaluate(
        {k: c for k, c in cols.items()}, npts=nrays, jobs=1).values
    make = _ray_system(h4, upsilon2)
    order = np.argsort(v_values)
    below = [k for k in order if v_values[k] < v0][::-1]
    above = [k for k in order if v_values[k] >= v0]

    def run(r: int):
        fixed = {k: float(c[r]) for k, c in cols.items()}
        out = np.full((len(v_values), 2), np.nan)
        y0 = init[:, r]
        steps = 0
        if not np.all(np.isfinite(y0)) or y0[0] == 0.0:
            return r, out, steps, "initial data undefined or h5(v0) = 0"
        f = make(fixed, float(y0[0]))
        try:
            for idx in (above, below):
                if not idx:
                    continue
                tr = integrate(f, v0, y0, v_values[idx], atol=atol, rtol=rtol)
                out[idx] = tr.y
                steps += tr.steps
        except StepSizeUnderflow as exc:
            return r, out, steps, f"{exc} (h5={exc.y[0]:.3g}, h5*={exc.y[1]:.3g})"
        return r, out, steps, None

    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs > 1 and nrays > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, range(nrays)))
    else:
        results = [run(r) for r in range(nrays)]
    h5 = np.empty((nrays, len(v_values)))
    dh5 = np.empty_like(h5)
    steps = np.zeros(nrays, dtype=int)
    failures = {}
    for r, out, st, err in results:
        h5[r], dh5[r], steps[r] = out[:, 0], out[:, 1], st
        if err is not None:
            failures[r] = err
    if strict and failures:
        r = min(failures)
        raise RayError(r, {k: float(c[r]) for k, c in cols.items()}, failures[r])
    return RayTable(v_values, cols, h5, dh5, steps, failures)


@dataclass
class VSectorResult:
    h4: Optional[Expr]
    h5: Optional[Expr]
    provenance: dict             # "h4"/"h5" -> tag
    table: Optional[RayTable] = None


def solve_v_sector(*, h5: Optional[Expr] = None, h4: Optional[Expr] = None,
                   upsilon2: Expr = nd.ZERO, h0: Expr = nd.ONE,
                   h5_init: Optional[Expr] = None, dh5_init: Optional[Expr] = None,
                   v_values: Sequence[float] = (), rays: Optional[Mapping] = None,
                   v0: float = 0.0, jobs: Optional[int] = None) -> VSectorResult:
    """Construct the missing v-sector function.

    Given h5 with Upsilon2 = 0: vacuum closed form for h4.  Given h4 (any
    Upsilon2) plus initial data at ``v0``: h5 integrated along ``rays``.
    """
    if h5 is not None and h4 is None:
        if not simplify(upsilon2).is_zero:
            raise PreconditionError("closed-form h4 needs Upsilon2 = 0; give h4 and integrate h5")
        return VSectorResult(vacuum_h4(h5, h0), h5, {"h4": "closed-form", "h5": "user-given"})
    if h4 is not None and h5 is None:
        if h5_init is None or dh5_init is None:
            raise PreconditionError("the ODE branch needs h5(v0) and h5*(v0)")
        table = integrate_h5(h4, upsilon2, h5_init, dh5_init, v_values, rays or {}, v0, jobs=jobs)
        return VSectorResult(h4, None, {"h4": "user-given", "h5": "ODE-integrated"}, table)
    raise PreconditionError("give exactly one of h4, h5")
