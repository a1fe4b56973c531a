"""Acceptance criteria, one printed PASS/FAIL line each.

Tolerances are pinned here on purpose; a failure must be reported, not tuned away.
"""
import io
import time
from pathlib import Path

import numpy as np
import pytest

from nconn.ansatz5d import Ansatz5D, closed_form_vs_kernel, einstein_structure, kernel_ricci
from nconn.deformations import (covector, deform, deformation, deformed_curvature,
                                field_strength, lc_equivalence, squares, stress, stress_trace)
from nconn.expr import Program
from nconn.expr import nodes as nd
from nconn.geometry import (DMetric, NConnection, SplitChart, anholonomy, canonical_paths,
                            curvature, five_d_chart, nonmetricity, torsion)
from nconn.harness import cli
from nconn.sampling import random_ansatz, random_model, random_poly, sample_points
from nconn.solver import integrate_h5

from helpers import ACCEPTANCE

SEED = 20240611
NMODELS, NPOINTS = 10, 100
NANSAETZE, APOINTS = 20, 50
VACUUM = Path(cli.__file__).with_name("models") / "vacuum.json"


def record(num, label, ok, detail):
    line = f"criterion {num:>2} {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def strict_rel(a, b):
    """|a - b| / max(|a|, |b|, 1e-30), no zero guard."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-30)


def rows(exprs, env):
    return Program(list(exprs)).evaluate(env, jobs=1).values


@pytest.fixture(scope="module")
def models():
    rng = np.random.default_rng(SEED)
    out = []
    for _ in range(NMODELS):
        g, N = random_model(rng)
        out.append((g, N, sample_points(rng, g.chart, NPOINTS)))
    return out


@pytest.fixture(scope="module")
def ansaetze():
    rng = np.random.default_rng(SEED + 1)
    return [(random_ansatz(rng), sample_points(rng, five_d_chart(), APOINTS))
            for _ in range(NANSAETZE)]


# 1 ---------------------------------------------------------------------------------------

def test_criterion_01_canonical_connection_contract(models):
    t0 = time.perf_counter()
    q = tb = 0.0
    for g, N, env in models:
        D = canonical_paths(g, N).direct
        Q, _ = nonmetricity(D, g, N).evaluate(env, jobs=1)
        T = torsion(D, N)
        q = max(q, np.abs(Q).max())
        for name in ("T^i_jk", "T^a_bc"):
            vals, _ = T.blocks[name].evaluate(env, jobs=1)
            tb = max(tb, np.abs(vals).max() if vals.size else 0.0)
    dt = time.perf_counter() - t0
    ok = q < 1e-10 and tb < 1e-12 and dt < 30.0
    assert record(1, "canonical d-connection", ok,
                  f"|Q| max {q:.2e} < 1e-10, hh/vv torsion max {tb:.2e} < 1e-12, {dt:.1f} s < 30 s")


# 2 ---------------------------------------------------------------------------------------

def test_criterion_02_distortion_paths_agree(models):
    worst = 0.0
    for g, N, env in models:
        P = canonical_paths(g, N)
        a, _ = P.via_levi_civita.evaluate(env, jobs=1)
        b, _ = P.direct.full().evaluate(env, jobs=1)
        worst = max(worst, np.abs(a - b).max())
    assert record(2, "Levi-Civita + distortion vs direct blocks", worst < 1e-9,
                  f"max |difference| {worst:.2e} < 1e-9")


# 3 ---------------------------------------------------------------------------------------

def test_criterion_03_curvature_blocks(models):
    worst = 0.0
    for g, N, env in models:
        R = curvature(canonical_paths(g, N).direct, N)
        blk, full = [], []
        for _, _, b, f in R.block_pairs():
            blk.append(b)
            full.append(f)
        worst = max(worst, strict_rel(rows(blk, env), rows(full, env)).max())
    assert record(3, "curvature blocks vs generic frame curvature", worst < 1e-8,
                  f"max relative deviation {worst:.2e} < 1e-8")


# 4 ---------------------------------------------------------------------------------------

def _closed_form_run(ansaetze, variant):
    t0 = time.perf_counter()
    rel = zero = 0.0
    failing = set()
    for a, env in ansaetze:
        rep = closed_form_vs_kernel(a, env, variant, jobs=1)
        rel = max(rel, rep.worst)
        zero = max(zero, rep.worst_zero)
        failing.update(rep.failing())
    return rel, zero, sorted(failing), time.perf_counter() - t0


def test_criterion_04_closed_forms_corrected(ansaetze):
    rel, zero, failing, dt = _closed_form_run(ansaetze, "corrected")
    ok = rel < 1e-8 and zero < 1e-10 and dt < 60.0
    assert record(4, "closed-form Ricci vs kernel [corrected R_4i sign, gamma]", ok,
                  f"max rel {rel:.2e} < 1e-8, zero pattern {zero:.2e} < 1e-10, {dt:.1f} s < 60 s")


@pytest.mark.xfail(strict=True, reason="printed R_4i w-term sign and gamma h4 coefficient "
                                       "disagree with the generic kernel")
def test_criterion_04_closed_forms_printed(ansaetze):
    rel, zero, failing, dt = _closed_form_run(ansaetze, "printed")
    ok = rel < 1e-8 and zero < 1e-10 and dt < 60.0
    assert record(4, "closed-form Ricci vs kernel [printed formulas]", ok,
                  f"max rel {rel:.2e}, needs < 1e-8, failing in {', '.join(failing) or 'none'}; "
                  f"zero pattern {zero:.2e}")


# 5 ---------------------------------------------------------------------------------------

def test_criterion_05_einstein_structure(ansaetze):
    worst = 0.0
    for a, env in ansaetze:
        vals = rows(einstein_structure(kernel_ricci(a)).values(), env)
        worst = max(worst, np.nanmax(np.abs(vals)))
    assert record(5, "Einstein block structure", worst < 1e-9, f"max |residual| {worst:.2e} < 1e-9")


# 6 ---------------------------------------------------------------------------------------

def test_criterion_06_vacuum_bundle_and_ode():
    import json

    out, err = io.StringIO(), io.StringIO()
    t0 = time.perf_counter()
    code = cli.run(["solve", "--model", str(VACUUM)], out, err)
    dt = time.perf_counter() - t0
    rep = json.loads(out.getvalue())
    eqs = rep["equations"]
    diag = [eqs[k]["max"] for k in eqs if k in ("G^1_-1", "G^2_-2", "G^3_-3", "G^4_-4", "G^5_-5")]
    worst = max(e["max"] for e in eqs.values())
    npts = rep["domain"]["points"]
    v = np.linspace(0.0, 1.0, 41)
    tab = integrate_h5(nd.ONE, nd.ONE, nd.ONE, nd.const(2), v, {"x2": [0.0], "x3": [0.0]}, jobs=1)
    diff = np.abs(tab.h5[0] - np.exp(2 * v))
    ode_err = max(diff.max(), (diff / np.exp(2 * v)).max())
    ok = (code == 0 and rep["status"] == "verified" and len(diag) == 5 and worst < 1e-6
          and npts == 17 ** 3 and dt < 60.0 and ode_err < 1e-8)
    assert record(6, "vacuum bundle end to end + manufactured ODE", ok,
                  f"{npts} points, all residuals max {worst:.2e} < 1e-6, {dt:.1f} s < 60 s; "
                  f"ODE h5 = e^(2v) max abs/rel error {ode_err:.2e} < 1e-8")


# 7 ---------------------------------------------------------------------------------------

def _random_p(rng, chart):
    d = chart.dim
    table = [[["0"] * d for _ in range(d)] for _ in range(d)]
    for a in range(d):
        for b in range(d):
            for c in range(d):
                if rng.random() < 0.3:
                    table[a][b][c] = f"0.1*({random_poly(rng, chart.coords)})"
    return deformation(chart, table)


def test_criterion_07_deformed_curvature(models):
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    for g, N, env in models:
        W = anholonomy(N)
        D = canonical_paths(g, N).direct
        P = _random_p(rng, g.chart)
        a, _ = deformed_curvature(curvature(D, N, W, blocks=False), P, D, N, W).evaluate(env, jobs=1)
        b, _ = curvature(deform(D, P), N, W, blocks=False).full.evaluate(env, jobs=1)
        worst = max(worst, np.abs(a - b).max())
    assert record(7, "deformed curvature vs direct curvature", worst < 1e-9,
                  f"{len(models)} deformations, max |difference| {worst:.2e} < 1e-9")


# 8 ---------------------------------------------------------------------------------------

def _lc_regime(fibre):
    rng = np.random.default_rng(SEED + 8)
    ch = SplitChart(("x1", "x2"), ("y3", "y4"))
    worst = 0.0
    for _ in range(5):
        g = [f"2 + {random_poly(rng, ch.h)}", f"1.5 + 0.2*exp({random_poly(rng, ch.h)})"]
        env = sample_points(rng, ch, NPOINTS)
        rep = lc_equivalence(DMetric.diagonal(ch, g, fibre(rng, ch)), NConnection.zero(ch), env)
        worst = max(worst, rep.max_difference)
    return worst


def test_criterion_08_lc_coincidence_x_independent_fibre():
    worst = _lc_regime(lambda rng, ch: [f"{rng.uniform(1, 3):.4f}", f"{rng.uniform(1, 3):.4f}"])
    assert record(8, "canonical = Levi-Civita Einstein [N = 0, fibre metric constant]",
                  worst < 1e-10, f"max |difference| {worst:.2e}, needs < 1e-10")


@pytest.mark.xfail(strict=True, reason="x-dependent fibre metric: Levi-Civita has mixed "
                                       "h/v coefficients the d-connection lacks")
def test_criterion_08_lc_coincidence_any_y_independent_fibre():
    worst = _lc_regime(lambda rng, ch: [f"2 + {random_poly(rng, ch.h)}", "1"])
    assert record(8, "canonical = Levi-Civita Einstein [N = 0, fibre metric x-dependent]",
                  worst < 1e-10, f"max |difference| {worst:.2e}, needs < 1e-10")


# 9 ---------------------------------------------------------------------------------------

def test_criterion_09_matter_identities(models):
    rng = np.random.default_rng(SEED + 9)
    anti = sym = tr = 0.0
    for g, N, env in models:
        ch = g.chart
        d = ch.dim
        D = canonical_paths(g, N).direct
        phi = covector(ch, [f"0.2 + {random_poly(rng, ch.coords)}" for _ in range(d)])
        mu2 = float(rng.uniform(0.5, 2.0))
        H = field_strength(phi, D, N)
        sig = stress(H, phi, g, mu2)
        h2, p2 = squares(H, phi, g)
        trace = nd.sub(stress_trace(sig, g),
                       nd.add(nd.mul(mu2 * (1 - d / 2), p2), nd.mul(1 - d / 4, h2)))
        v = rows([nd.add(H[a, b], H[b, a]) for a in range(d) for b in range(d)]
                 + [nd.sub(sig[a, b], sig[b, a]) for a in range(d) for b in range(d)]
                 + [trace], env)
        k = d * d
        anti = max(anti, np.abs(v[:k]).max())
        sym = max(sym, np.abs(v[k:2 * k]).max())
        tr = max(tr, np.abs(v[-1]).max())
    ok = anti < 1e-10 and sym < 1e-10 and tr < 1e-10
    assert record(9, "H antisymmetry, stress symmetry and trace", ok,
                  f"{anti:.2e}, {sym:.2e}, {tr:.2e} all < 1e-10")


# 10 --------------------------------------------------------------------------------------

def test_criterion_10_determinism():
    outs = set()
    for jobs in ("1", "2", "4", "1"):
        for cmd in (["residuals"], ["solve"]):
            out, err = io.StringIO(), io.StringIO()
            cli.run(cmd + ["--model", str(VACUUM), "--jobs", jobs,
                           "--grid", "x2=-1:1:9,x3=-1:1:9,v=0.5:1.5:9"], out, err)
            outs.add((cmd[0], out.getvalue()))
    ok = len(outs) == 2
    assert record(10, "byte-identical reports across runs and --jobs 1/2/4", ok,
                  f"{len(outs)} distinct outputs for 2 commands")
