"""Off-diagonal coefficients: w_i from R_{4i} = 0 and n_i from R_{5i} = 0.

R_{4i} = (w_i beta - alpha_i) / 2h5 vanishes for w_i = alpha_i / beta.
R_{5i} is proportional to n_i** + gamma n_i* with
gamma = 3h5*/2h5 - h4*/2h4, so n_i* = n2_i K with the kernel
K = |h4|^(1/2) |h5|^(-3/2) = exp(-int gamma dv).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec

from ..ansatz5d import Ansatz5D, ricci_closed_form, star
from ..expr import nodes as nd
from ..expr.calculus import diff
from ..expr.evaluate import Program
from ..expr.nodes import UNARY, Expr
from ..compare import relative_deviation
from ..expr.simplify import _Simplifier, simplify
from .vsector import PreconditionError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-11


class InconsistencyError(ValueError):
    """The constraint has no solution at some sampled point."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to converge or hit an undefined kernel."""


@dataclass
class WSolution:
    w: tuple
    provenance: tuple        # per component
    beta_vanishes: bool


def solve_w(a: Ansatz5D, user_w: Optional[Sequence[Expr]] = None,
            env: Optional[Mapping[str, object]] = None, tol: float = 1e-10) -> WSolution:
    """w_i = alpha_i / beta, or the user's w_i where beta vanishes identically.

    With ``env`` the sampled points are screened for beta = 0 together with
    alpha_i != 0, which admits no solution.
    """
    cf = ricci_closed_form(a, "corrected")
    beta = simplify(cf.beta)
    user = tuple(nd.as_expr(x) for x in user_w) if user_w is not None else a.w
    vals = None
    if env is not None:
        vals = Program([beta, *cf.alpha]).evaluate(env, jobs=1).values
    if beta.is_zero:
        for i, al in enumerate(cf.alpha):
            if simplify(al).is_zero:
                continue
            if vals is None or np.nanmax(np.abs(vals[1 + i]), initial=0.0) > tol:
                raise InconsistencyError(
                    f"beta vanishes identically but alpha_{i + 1} does not")
        return WSolution(user, ("user-given",) * 3, True)
    if vals is not None:
        small = np.abs(vals[0]) <= tol
        for i in range(3):
            clash = small & (np.abs(vals[1 + i]) > tol)
            if clash.any():
                k = int(np.nonzero(clash)[0][0])
                where = {c: float(np.asarray(env[c]).reshape(-1)[k] if np.ndim(env[c]) else env[c])
                         for c in sorted(env)}
                raise InconsistencyError(f"beta = 0 with alpha_{i + 1} != 0 at {where}")
    w = tuple(simplify(al / beta) for al in cf.alpha)
    return WSolution(w, ("closed-form",) * 3, False)


def n_kernel(h4: Expr, h5: Expr) -> Expr:
    return simplify(nd.sqrt(nd.absolute(h4)) * nd.power(nd.absolute(h5), -1.5))


def _linear_in_v(u: Expr) -> Optional[Expr]:
    du = simplify(diff(u, "v"))
    if du.is_zero or nd.depends_on(du, "v"):
        return None
    return du


def _atom_antiderivative(atom: Expr, p: float) -> Optional[Expr]:
    """Antiderivative in v of atom^p for atoms linear in v (possibly under abs/exp)."""
    if atom.kind == UNARY and atom.name == "exp":
        du = _linear_in_v(atom.args[0])
        return None if du is None else nd.power(atom, p) / (p * du)
    if atom.kind == UNARY and atom.name == "abs":
        u = atom.args[0]
        du = _linear_in_v(u)
        if du is None or p == -1.0:
            return None
        return u * nd.power(atom, p) / ((p + 1) * du)
    du = _linear_in_v(atom)
    if du is None:
        return None
    if p == -1.0:
        return nd.ln(nd.absolute(atom)) / du
    return nd.power(atom, p + 1) / ((p + 1) * du)


def closed_form_antiderivative(K: Expr) -> Optional[Expr]:
    """A v-antiderivative of ``K`` when one is recognised, else None.

    Recognised: K = C(x) * f(v) with a single v-dependent factor u^p,
    |u|^p or exp(u) and u linear in v.  The result is checked by
    differentiation before it is returned.
    """
    K = simplify(K)
    if not nd.depends_on(K, "v"):
        return simplify(K * nd.coord("v"))
    s = _Simplifier()
    coef, factors = s.split(K)
    moving = [(b, x) for b, x in factors.items() if nd.depends_on(b, "v")]
    if len(moving) != 1:
        return None
    atom, p = moving[0]
    F = _atom_antiderivative(atom, p)
    if F is None:
        return None
    rest = [nd.power(b, x) for b, x in factors.items() if b is not atom]
    F = simplify(_product([nd.const(coef), F, *rest]))
    if simplify(nd.sub(diff(F, "v"), K)).is_zero or _agrees_numerically(diff(F, "v"), K):
        return F
    return None


def _agrees_numerically(a: Expr, b: Expr, npts: int = 24, rel: float = 1e-9) -> bool:
    """Seeded spot check of a == b; needs a majority of points where both are defined."""
    ca, pa = nd.free_names(a)
    cb, pb = nd.free_names(b)
    rng = np.random.default_rng(20240611)
    env = {name: rng.uniform(-2.0, 2.0, npts) for name in sorted(ca | cb | pa | pb)}
    vals = Program([a, b]).evaluate(env, npts=npts, jobs=1).values
    ok = np.isfinite(vals).all(axis=0)
    if ok.sum() < npts // 2:
        return False
    return bool(np.all(relative_deviation(vals[0, ok], vals[1, ok]) <= rel))


def _product(items):
    out = nd.ONE
    for x in items:
        out = out * x
    return out


@dataclass
class QuadratureTable:
    """int_{v0}^{v} K dv' sampled on rays; ``values[r, k]`` at ``v[k]``."""

    v: np.ndarray
    rays: dict
    values: np.ndarray
    error: np.ndarray        # estimated absolute error per entry


def quadrature(K: Expr, v_values: Sequence[float], rays: Mapping[str, Sequence[float]],
               v0: float = 0.0, epsabs: float = QUAD_EPSABS,
               epsrel: float = QUAD_EPSREL) -> QuadratureTable:
    """Cumulative adaptive quadrature of ``K`` from ``v0``, vectorized over rays."""
    v_values = np.asarray(v_values, dtype=float)
    cols = {k: np.asarray(rays[k], dtype=float) for k in sorted(rays)}
    nrays = len(next(iter(cols.values()))) if cols else 1
    prog = Program([K])

    def f(t):
        env = dict(cols)
        env["v"] = np.full(nrays, t)
        res = prog.evaluate(env, npts=nrays, jobs=1)
        if res.bad.any():
            r = int(np.nonzero(res.bad[0])[0][0])
            raise QuadratureError(f"kernel undefined at v={t:.17g} on ray {r}"
                                  " (h4 or h5 vanishes)")
        return res.values[0]

    out = np.zeros((nrays, len(v_values)))
    err = np.zeros_like(out)
    for side in (1.0, -1.0):
        idx = [k for k in np.argsort(side * v_values) if side * (v_values[k] - v0) >= 0]
        acc = np.zeros(nrays)
        acc_err = np.zeros(nrays)
        t = v0
        for k in idx:
            if v_values[k] != t:
                val, e, info = quad_vec(f, t, v_values[k], epsabs=epsabs, epsrel=epsrel,
                                        norm="max", full_output=True)
                if not info.success:
                    raise QuadratureError(f"quadrature did not converge on [{t:.6g}, "
                                          f"{v_values[k]:.6g}] (error estimate {e:.3g})")
                acc = acc + val
                acc_err = acc_err + e
                t = v_values[k]
            out[:, k] = acc
            err[:, k] = acc_err
    return QuadratureTable(v_values, cols, out, err)


@dataclass
class NSolution:
    n: Optional[tuple]           # expressions when closed form
    provenance: tuple
    kernel: Expr
    antiderivative: Optional[Expr]
    n1: tuple
    n2: tuple
    table: Optional[QuadratureTable] = None
    v0: float = 0.0

    def values(self, i: int, env: Mapping[str, object]) -> np.ndarray:
        """n_i on points; closed form only."""
        if self.n is None:
            raise ValueError("n is tabulated; use the quadrature table")
        return Program([self.n[i]]).evaluate(env, jobs=1).values[0]


def solve_n(a: Ansatz5D, n1: Sequence[Expr] = (nd.ZERO,) * 3, n2: Sequence[Expr] = (nd.ONE,) * 3,
            v0: float = 0.0, v_values: Optional[Sequence[float]] = None,
            rays: Optional[Mapping] = None, force_quadrature: bool = False) -> NSolution:
    """n_i = n1_i + n2_i * F(v), F' = K.

    Closed form: F is an antiderivative and the lower limit is absorbed in
    n1_i.  Otherwise F = int_{v0}^{v} K, tabulated at ``v_values`` on ``rays``.
    """
    n1 = tuple(nd.as_expr(x) for x in n1)
    n2 = tuple(nd.as_expr(x) for x in n2)
    for name, seq in (("n1", n1), ("n2", n2)):
        for e in seq:
            if nd.depends_on(e, "v") or nd.depends_on(e, "y5"):
                raise PreconditionError(f"{name} may depend on horizontal coordinates only")
    if simplify(a.h4).is_zero or simplify(a.h5).is_zero:
        raise PreconditionError("h4 and h5 must be nonzero")
    K = n_kernel(a.h4, a.h5)
    trivial = all(simplify(x).is_zero for x in n2)
    F = None if force_quadrature else closed_form_antiderivative(K)
    if trivial:
        return NSolution(n1, ("closed-form",) * 3, K, F, n1, n2, v0=v0)
    if F is not None:
        n = tuple(simplify(nd.add(n1[i], n2[i] * F)) for i in range(3))
        return NSolution(n, ("closed-form",) * 3, K, F, n1, n2, v0=v0)
    if v_values is None:
        raise PreconditionError("no closed-form antiderivative; quadrature needs v samples")
    table = quadrature(K, v_values, rays or {}, v0)
    return NSolution(None, ("quadrature",) * 3, K, None, n1, n2, table, v0)


def n_equation_residual(a: Ansatz5D, n: Expr) -> Expr:
    """n** + gamma n* for a symbolic n."""
    gamma = ricci_closed_form(a, "corrected").gamma
    ns = star(n)
    return simplify(nd.add(star(ns), gamma * ns))


def quadrature_residual(a: Ansatz5D, sol: NSolution, i: int, v_values: Sequence[float],
                        rays: Mapping[str, Sequence[float]], h: float = 1e-2) -> np.ndarray:
    """n_i** + gamma n_i* from five-point differences of the tabulated n_i.

    Returns an array (nrays, len(v_values)); independent of the kernel
    algebra, since only quadrature values of K enter.
    """
    v_values = np.asarray(v_values, dtype=float)
    offsets = np.arange(-2, 3) * h
    stencil = (v_values[:, None] + offsets[None, :]).ravel()
    table = quadrature(sol.kernel, stencil, rays, sol.v0)
    cols = table.rays
    nrays = table.values.shape[0]
    F = table.values.reshape(nrays, len(v_values), 5)
    d1 = (F[..., 0] - 8 * F[..., 1] + 8 * F[..., 3] - F[..., 4]) / (12 * h)
    d2 = (-F[..., 0] + 16 * F[..., 1] - 30 * F[..., 2] + 16 * F[..., 3] - F[..., 4]) / (12 * h * h)
    gamma = ricci_closed_form(a, "corrected").gamma
    env = {k: np.repeat(c, len(v_values)) for k, c in cols.items()}
    env["v"] = np.tile(v_values, nrays)
    g, n2 = Program([gamma, sol.n2[i]]).evaluate(env, npts=nrays * len(v_values), jobs=1).values
    return (n2 * (d2.ravel() + g * d1.ravel())).reshape(nrays, len(v_values))
