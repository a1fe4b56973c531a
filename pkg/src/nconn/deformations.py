"""Connection deformations, torsion/nonmetricity traces and Proca-type sources.

Covectors are :class:`ComponentField` objects with a single lower full slot,
components taken in the adapted coframe.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .compare import nanmax
from .expr import nodes as nd
from .expr.evaluate import Program
from .expr.parser import parse
from .geometry.chart import SplitChart
from .geometry.connection import _sum, as_full, levi_civita, torsion
from .geometry.curvature import Curvature, curvature, einstein, raise_first, ricci, scalar
from .geometry.fields import ComponentField, zeros
from .geometry.metric import DMetric, NConnection, anholonomy, frame_diff

LAMBDA_CONVENTIONS = ("interior", "trace_scaled")


@dataclass(frozen=True)
class TraceAnsatzConstants:
    kappa0: float = 0.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    mu2: float = 0.0
    k: float = 1.0


def covector(chart: SplitChart, comps: Sequence, name: str = "phi") -> ComponentField:
    if len(comps) != chart.dim:
        raise ValueError(f"covector needs {chart.dim} components, got {len(comps)}")
    data = zeros((chart.dim,))
    for a, c in enumerate(comps):
        data[a] = parse(c, chart) if isinstance(c, str) else nd.as_expr(c)
    return ComponentField.full(name, chart, "d", data)


def deformation(chart: SplitChart, table=None, name: str = "P") -> ComponentField:
    """Distortion tensor P^a_bc from a nested (dim x dim x dim) table."""
    d = chart.dim
    data = zeros((d, d, d))
    if table is not None:
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    item = table[a][b][c]
                    data[a, b, c] = parse(item, chart) if isinstance(item, str) else nd.as_expr(item)
    return ComponentField.full(name, chart, "udd", data)


def weyl_deformation(phi: ComponentField) -> ComponentField:
    """P^a_bc = delta^a_b phi_c."""
    chart = phi.chart
    d = chart.dim
    data = zeros((d, d, d))
    for a in range(d):
        for c in range(d):
            data[a, a, c] = phi.data[c]
    return ComponentField.full("P", chart, "udd", data)


def deform(base, P: ComponentField) -> ComponentField:
    """Componentwise sum Gamma + P."""
    out = as_full(base) + P
    out.name = "Gamma"
    return out


def covariant_derivative_udd(P: ComponentField, conn, N: NConnection) -> np.ndarray:
    """nabla_e P^a_bc, indexed [a, b, c, e] (derivative slot last)."""
    Gam = as_full(conn).data
    Pd = P.data
    d = N.chart.dim
    out = zeros((d, d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    terms = [frame_diff(Pd[a, b, c], e, N)]
                    for mu in range(d):
                        if not Gam[a, mu, e].is_zero and not Pd[mu, b, c].is_zero:
                            terms.append(Gam[a, mu, e] * Pd[mu, b, c])
                        if not Gam[mu, b, e].is_zero and not Pd[a, mu, c].is_zero:
                            terms.append(nd.neg(Gam[mu, b, e] * Pd[a, mu, c]))
                        if not Gam[mu, c, e].is_zero and not Pd[a, b, mu].is_zero:
                            terms.append(nd.neg(Gam[mu, c, e] * Pd[a, b, mu]))
                    out[a, b, c, e] = _sum(terms)
    return out


def deformed_curvature(R_hat, P: ComponentField, conn_hat, N: NConnection,
                       W: Optional[ComponentField] = None) -> ComponentField:
    """Curvature of conn_hat + P assembled from R_hat, the covariant exterior
    derivative of P and the quadratic P-term."""
    chart = N.chart
    d = chart.dim
    W = anholonomy(N) if W is None else W
    base = R_hat.full if isinstance(R_hat, Curvature) else R_hat
    T = torsion(conn_hat, N, W).full.data
    DP = covariant_derivative_udd(P, conn_hat, N)
    Pd = P.data
    out = zeros((d, d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(c + 1, d):
                    terms = [base.data[a, b, c, e], DP[a, b, e, c], nd.neg(DP[a, b, c, e])]
                    for mu in range(d):
                        if not T[mu, c, e].is_zero and not Pd[a, b, mu].is_zero:
                            terms.append(T[mu, c, e] * Pd[a, b, mu])
                        if not Pd[mu, b, e].is_zero and not Pd[a, mu, c].is_zero:
                            terms.append(Pd[mu, b, e] * Pd[a, mu, c])
                        if not Pd[mu, b, c].is_zero and not Pd[a, mu, e].is_zero:
                            terms.append(nd.neg(Pd[mu, b, c] * Pd[a, mu, e]))
                    val = _sum(terms)
                    out[a, b, c, e] = val
                    out[a, b, e, c] = nd.neg(val)
    return ComponentField.full("R", chart, "uddd", out)


def traces(T: ComponentField, Q: ComponentField, g: DMetric,
           convention: str = "interior") -> tuple[ComponentField, ComponentField, ComponentField]:
    """Torsion trace, Weyl covector and traceless nonmetricity trace.

    ``interior`` contracts the raised frame with the second metric slot of
    Q minus its Weyl part: Lambda_a = G^{bd} Q_{d a b} - Qw_a.  The
    ``trace_scaled`` variant subtracts (n+m) Qw_a instead.
    """
    if convention not in LAMBDA_CONVENTIONS:
        raise ValueError(f"unknown Lambda convention {convention!r}; use one of {LAMBDA_CONVENTIONS}")
    chart = g.chart
    d = chart.dim
    Gi = g.full_inverse()
    Td, Qd = T.data, Q.data
    tt, qq, lam = zeros((d,)), zeros((d,)), zeros((d,))
    for c in range(d):
        tt[c] = _sum(Td[a, a, c] for a in range(d))
        qq[c] = nd.mul(0.25, _sum(Gi[a, b] * Qd[c, a, b] for a in range(d) for b in range(d)
                                  if not Gi[a, b].is_zero))
    scale = 1.0 if convention == "interior" else float(d)
    for a in range(d):
        inner = _sum(Gi[b, e] * Qd[e, a, b] for b in range(d) for e in range(d)
                     if not Gi[b, e].is_zero)
        lam[a] = nd.sub(inner, nd.mul(scale, qq[a]))
    return (ComponentField.full("Tt", chart, "d", tt),
            ComponentField.full("Qw", chart, "d", qq),
            ComponentField.full("Lambda", chart, "d", lam))


@dataclass
class ProportionalityReport:
    ok: bool
    residuals: dict = field(default_factory=dict)  # name -> max abs residual
    tolerance: float = 1e-10


def proportionality_check(tt: ComponentField, qq: ComponentField, lam: ComponentField,
                          phi: ComponentField, kappa: TraceAnsatzConstants,
                          env: Mapping[str, object], tol: float = 1e-10) -> ProportionalityReport:
    """Test Tt = k0 phi, Qw = k1 phi, Lambda = k2 phi at sampled points."""
    roots = []
    for cov, k in ((tt, kappa.kappa0), (qq, kappa.kappa1), (lam, kappa.kappa2)):
        roots.extend(nd.sub(cov.data[a], nd.mul(k, phi.data[a])) for a in range(phi.chart.dim))
    vals = Program(roots).evaluate(env, jobs=1).values
    d = phi.chart.dim
    res = {}
    for r, name in enumerate(("torsion", "weyl", "lambda")):
        block = vals[r * d:(r + 1) * d]
        res[name] = float(np.max(np.abs(block))) if block.size else 0.0
    ok = all(np.isfinite(v) and v <= tol for v in res.values())
    return ProportionalityReport(ok, res, tol)


def field_strength(phi: ComponentField, conn, N: NConnection,
                   W: Optional[ComponentField] = None) -> ComponentField:
    """H_nm = D_n phi_m - D_m phi_n + W^c_mn phi_c, with D_n phi_m = e_n phi_m - Gamma^c_mn phi_c."""
    chart = N.chart
    d = chart.dim
    W = anholonomy(N) if W is None else W
    Gam = as_full(conn).data
    ph = phi.data

    def D(nu, mu):
        return _sum([frame_diff(ph[mu], nu, N),
                     nd.neg(_sum(Gam[c, mu, nu] * ph[c] for c in range(d) if not ph[c].is_zero))])

    H = zeros((d, d))
    for nu in range(d):
        for mu in range(nu + 1, d):
            val = _sum([D(nu, mu), nd.neg(D(mu, nu)),
                        _sum(W.data[c, mu, nu] * ph[c] for c in range(d) if not ph[c].is_zero)])
            H[nu, mu] = val
            H[mu, nu] = nd.neg(val)
    return ComponentField.full("H", chart, "dd", H)


def _raise_both(H: ComponentField, g: DMetric) -> np.ndarray:
    Gi = g.full_inverse()
    d = g.chart.dim
    up = zeros((d, d))
    for a in range(d):
        for b in range(d):
            up[a, b] = _sum(Gi[a, c] * Gi[b, e] * H.data[c, e] for c in range(d) for e in range(d)
                            if not Gi[a, c].is_zero and not Gi[b, e].is_zero)
    return up


def squares(H: ComponentField, phi: ComponentField, g: DMetric) -> tuple[nd.Expr, nd.Expr]:
    """(H^{nm} H_nm, phi^n phi_n)."""
    Gi = g.full_inverse()
    d = g.chart.dim
    Hu = _raise_both(H, g)
    h2 = _sum(Hu[a, b] * H.data[a, b] for a in range(d) for b in range(d))
    p2 = _sum(Gi[a, b] * phi.data[a] * phi.data[b] for a in range(d) for b in range(d)
              if not Gi[a, b].is_zero)
    return h2, p2


def stress(H: ComponentField, phi: ComponentField, g: DMetric, mu2: float) -> ComponentField:
    """Sigma_ab = H_a^m H_bm - 1/4 G_ab H^2 + mu2 (phi_a phi_b - 1/2 G_ab phi^2)."""
    Gi = g.full_inverse()
    G = g.full_block()
    d = g.chart.dim
    h2, p2 = squares(H, phi, g)
    Hd = H.data
    mixed = zeros((d, d))  # H_a^m
    for a in range(d):
        for m_ in range(d):
            mixed[a, m_] = _sum(Gi[m_, l] * Hd[a, l] for l in range(d) if not Gi[m_, l].is_zero)
    out = zeros((d, d))
    for a in range(d):
        for b in range(d):
            terms = [_sum(mixed[a, m_] * Hd[b, m_] for m_ in range(d)),
                     nd.mul(mu2, phi.data[a] * phi.data[b])]
            if not G[a, b].is_zero:
                terms.append(nd.neg(nd.mul(0.25, G[a, b] * h2)))
                terms.append(nd.neg(nd.mul(0.5 * mu2, G[a, b] * p2)))
            out[a, b] = _sum(terms)
    return ComponentField.full("Sigma", g.chart, "dd", out)


def stress_trace(sigma: ComponentField, g: DMetric) -> nd.Expr:
    Gi = g.full_inverse()
    d = g.chart.dim
    return _sum(Gi[a, b] * sigma.data[a, b] for a in range(d) for b in range(d)
                if not Gi[a, b].is_zero)


def proca_residual(H: ComponentField, phi: ComponentField, conn, g: DMetric, N: NConnection,
                   mu2: float) -> ComponentField:
    """D_n H^{nm} - mu2 phi^m (evaluated only, never solved)."""
    Gam = as_full(conn).data
    Gi = g.full_inverse()
    d = g.chart.dim
    Hu = _raise_both(H, g)
    out = zeros((d,))
    for m_ in range(d):
        terms = [frame_diff(Hu[nu, m_], nu, N) for nu in range(d)]
        for nu in range(d):
            for l in range(d):
                if not Gam[nu, l, nu].is_zero and not Hu[l, m_].is_zero:
                    terms.append(Gam[nu, l, nu] * Hu[l, m_])
                if not Gam[m_, l, nu].is_zero and not Hu[nu, l].is_zero:
                    terms.append(Gam[m_, l, nu] * Hu[nu, l])
        phi_up = _sum(Gi[m_, a] * phi.data[a] for a in range(d) if not Gi[m_, a].is_zero)
        terms.append(nd.neg(nd.mul(mu2, phi_up)))
        out[m_] = _sum(terms)
    return ComponentField("Proca", g.chart, ("fu",), out)


def einstein_mixed(conn, g: DMetric, N: NConnection, W=None) -> ComponentField:
    """Mixed Einstein tensor G^a_b of a connection."""
    R = curvature(conn, N, W, blocks=False)
    ric = ricci(R)
    return raise_first(einstein(ric, scalar(ric, g), g), g, name="G")


@dataclass
class LCReport:
    max_difference: float
    per_component: dict
    source_mismatch: Optional[float]
    also_solves: bool
    tolerance: float
    points: int
    bad_points: int = 0      # points where some component is undefined


def lc_equivalence(g: DMetric, N: NConnection, env: Mapping[str, object], tol: float = 1e-10,
                   conn_hat=None, sources: Optional[ComponentField] = None,
                   W=None, jobs=None) -> LCReport:
    """Compare the Einstein tensors of the canonical and Levi-Civita connections.

    ``sources`` (mixed, already multiplied by the coupling) is optional; when
    given, the Levi-Civita Einstein tensor is also checked against it.
    """
    from .geometry.connection import canonical_dconnection

    W = anholonomy(N) if W is None else W
    conn_hat = canonical_dconnection(g, N) if conn_hat is None else conn_hat
    G_hat = einstein_mixed(conn_hat, g, N, W)
    G_lc = einstein_mixed(levi_civita(g, N, W), g, N, W)
    diff = G_hat - G_lc
    idxs = list(diff.indices())
    roots = [diff.data[i] for i in idxs]
    if sources is not None:
        roots += [nd.sub(G_lc.data[i], sources.data[i]) for i in idxs]
    res = Program(roots).evaluate(env, jobs=jobs)
    vals = res.values
    npts = vals.shape[1]
    k = len(idxs)
    per = {}
    for r, idx in enumerate(idxs):
        row = vals[r]
        per[diff.label(idx)] = nanmax(np.abs(row))
    worst = max(per.values(), default=0.0)
    mismatch = None
    if sources is not None:
        src = vals[k:]
        mismatch = nanmax(np.abs(src))
    bad = int(res.bad.any(axis=0).sum()) if roots else 0
    ok = bad == 0 and worst <= tol and (mismatch is None or mismatch <= tol)
    return LCReport(worst, per, mismatch, bool(ok), tol, npts, bad)
