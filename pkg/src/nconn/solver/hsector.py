"""The (x2, x3) block: residual checks and the conformal relaxation solver.

With g2 = g3 = exp(psi) the block equation bracket = 2 g2 g3 Upsilon4
reduces to the nonlinear Poisson problem

    psi_x2x2 + psi_x3x3 = 2 Upsilon4 exp(psi),

solved here on a rectangle with Dirichlet data by red-black Newton-SOR.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..ansatz5d import h_sector_bracket
from ..compare import nanmax
from ..expr import nodes as nd
from ..expr.evaluate import Program
from ..expr.nodes import Expr
from ..expr.simplify import simplify

MODES = ("verify", "conformal")


class RelaxationError(ArithmeticError):
    """Relaxation stopped without reaching the residual tolerance."""

    def __init__(self, message: str, history: Sequence[float]):
        self.history = list(history)
        tail = ", ".join(f"{r:.3g}" for r in self.history[-5:])
        super().__init__(f"{message}; last residuals: [{tail}]")


@dataclass
class HSectorResidual:
    """Pointwise residual of bracket(g2, g3) - 2 g2 g3 Upsilon4."""

    expression: Expr
    values: np.ndarray
    tolerance: float

    @property
    def max_abs(self) -> float:
        return nanmax(np.abs(self.values))

    @property
    def domain_errors(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.values)))

    @property
    def ok(self) -> bool:
        return self.domain_errors == 0 and self.max_abs <= self.tolerance


def h_sector_residual_expr(g2: Expr, g3: Expr, upsilon4: Expr) -> Expr:
    return simplify(nd.sub(h_sector_bracket(g2, g3), 2 * g2 * g3 * upsilon4))


def verify_h_sector(g2: Expr, g3: Expr, upsilon4: Expr, env: Mapping[str, object],
                    tol: float = 1e-10, jobs=None) -> HSectorResidual:
    if g2.is_zero or g3.is_zero:
        raise ValueError("g2 and g3 must be nonzero")
    r = h_sector_residual_expr(g2, g3, upsilon4)
    vals = Program([r]).evaluate(env, jobs=jobs).values[0]
    return HSectorResidual(r, vals, tol)


@dataclass
class ConformalSolution:
    """psi on a tensor grid, indexed psi[i2, i3]."""

    x2: np.ndarray
    x3: np.ndarray
    psi: np.ndarray
    residual: float          # max |discrete residual| over interior nodes
    iterations: int
    history: list = field(default_factory=list)

    def g(self) -> np.ndarray:
        """g2 = g3 = exp(psi) on the grid."""
        return np.exp(self.psi)

    def compare(self, psi_exact: Expr) -> float:
        """Max |psi - psi_exact| over the grid."""
        X2, X3 = np.meshgrid(self.x2, self.x3, indexing="ij")
        ref = Program([psi_exact]).evaluate({"x2": X2.ravel(), "x3": X3.ravel()}, jobs=1).values[0]
        return float(np.max(np.abs(self.psi.ravel() - ref)))


def _discrete_residual(psi, rhs_coef, hx, hy):
    lap = ((psi[2:, 1:-1] - 2 * psi[1:-1, 1:-1] + psi[:-2, 1:-1]) / hx ** 2
           + (psi[1:-1, 2:] - 2 * psi[1:-1, 1:-1] + psi[1:-1, :-2]) / hy ** 2)
    return lap - 2.0 * rhs_coef[1:-1, 1:-1] * np.exp(psi[1:-1, 1:-1])


def solve_conformal(upsilon4: Expr, boundary: Expr, x2_range: tuple, x3_range: tuple,
                    shape: tuple = (33, 33), tol: float = 1e-10, max_iter: int = 50000,
                    omega: Optional[float] = None, initial: Optional[Expr] = None) -> ConformalSolution:
    """Relax psi_x2x2 + psi_x3x3 = 2 Upsilon4 exp(psi) with psi = ``boundary`` on the edge.

    ``upsilon4`` and ``boundary`` are expressions in x2, x3.  The interior
    starts from ``initial`` (default: the boundary expression).  Raises
    :class:`RelaxationError` with the residual history on non-convergence.
    """
    n2, n3 = (int(s) for s in shape)
    if n2 < 3 or n3 < 3:
        raise ValueError("conformal grid needs at least 3 nodes per axis")
    x2 = np.linspace(float(x2_range[0]), float(x2_range[1]), n2)
    x3 = np.linspace(float(x3_range[0]), float(x3_range[1]), n3)
    hx, hy = x2[1] - x2[0], x3[1] - x3[0]
    if hx <= 0 or hy <= 0:
        raise ValueError("ranges must be increasing")
    X2, X3 = np.meshgrid(x2, x3, indexing="ij")
    env = {"x2": X2.ravel(), "x3": X3.ravel()}
    start = boundary if initial is None else initial
    vals = Program([upsilon4, boundary, start]).evaluate(env, jobs=1)
    if vals.bad.any():
        raise ValueError("Upsilon4, boundary or initial guess undefined on the grid")
    ups = vals.values[0].reshape(n2, n3)
    psi = vals.values[2].reshape(n2, n3).copy()
    edge = vals.values[1].reshape(n2, n3)
    psi[0, :], psi[-1, :], psi[:, 0], psi[:, -1] = edge[0, :], edge[-1, :], edge[:, 0], edge[:, -1]

    if omega is None:
        rho = 0.5 * (np.cos(np.pi / (n2 - 1)) + np.cos(np.pi / (n3 - 1)))
        omega = 2.0 / (1.0 + np.sqrt(max(1.0 - rho * rho, 0.0)))
    parity = (np.add.outer(np.arange(n2), np.arange(n3)) % 2)[1:-1, 1:-1]
    masks = [parity == 0, parity == 1]
    diag0 = -2.0 / hx ** 2 - 2.0 / hy ** 2

    history: list = []
    res = np.inf
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            for mask in masks:
                r = _discrete_residual(psi, ups, hx, hy)
                jac = diag0 - 2.0 * ups[1:-1, 1:-1] * np.exp(psi[1:-1, 1:-1])
                step = np.where(mask, r / jac, 0.0)
                psi[1:-1, 1:-1] -= omega * step
            res = float(np.max(np.abs(_discrete_residual(psi, ups, hx, hy))))
            if it % 10 == 0 or res <= tol:
                history.append(res)
            if not np.isfinite(res):
                raise RelaxationError(f"relaxation diverged after {it} sweeps", history)
            if res <= tol:
                return ConformalSolution(x2, x3, psi, res, it, history)
    if not history or history[-1] != res:
        history.append(res)
    raise RelaxationError(f"no convergence to {tol:g} after {max_iter} sweeps", history)


def solve_h_sector(g2: Expr, upsilon4: Expr, mode: str = "verify", *, g3: Optional[Expr] = None,
                   env: Optional[Mapping[str, object]] = None, tol: float = 1e-10, **conformal):
    """Dispatch on ``mode``: residual report (verify) or relaxed psi (conformal).

    In conformal mode ``g2`` only seeds the boundary data when no explicit
    ``boundary`` is passed: psi = ln g2 on the rectangle edge.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if g2.is_zero:
        raise ValueError("g2 must be nonzero")
    if mode == "verify":
        if g3 is None or env is None:
            raise ValueError("verify mode needs g3 and evaluation points")
        return verify_h_sector(g2, g3, upsilon4, env, tol=tol, jobs=conformal.get("jobs"))
    boundary = conformal.pop("boundary", None)
    if boundary is None:
        boundary = simplify(nd.ln(g2))
    conformal.pop("jobs", None)
    return solve_conformal(upsilon4, boundary, tol=tol, **conformal)
