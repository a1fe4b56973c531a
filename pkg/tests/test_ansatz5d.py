import numpy as np
import pytest

from nconn.ansatz5d import (Ansatz5D, AnsatzError, SourceSpec, build, closed_form_vs_kernel,
                            einstein_structure, kernel_ricci, ricci_closed_form,
                            source_compatibility)
from nconn.expr import evaluate, parse
from nconn.expr import nodes as nd
from nconn.geometry import canonical_dconnection, curvature, five_d_chart
from nconn.sampling import random_ansatz, sample_points

from helpers import values

CH = five_d_chart()


def at(e, **p):
    base = {c: 0.0 for c in CH.coords}
    base.update(p)
    return evaluate(e, base)


@pytest.fixture(scope="module")
def ansaetze():
    rng = np.random.default_rng(44)
    return [(random_ansatz(rng), sample_points(rng, CH, 50)) for _ in range(4)]


# -- construction -------------------------------------------------------------------

def test_build_places_functions():
    a = Ansatz5D.from_strings("exp(x2)", "x3^2 + 1", "v + 2", "exp(v)", ["x2", "v", "0"],
                              ["0", "x3", "v^2"], g1=-1)
    g, N = build(a)
    assert g.g[0, 0] is nd.const(-1) and g.g[1, 1] is a.g2 and g.h[1, 1] is a.h5
    assert g.g[0, 1].is_zero and g.h[0, 1].is_zero
    assert N.coeff(1, 0) is a.w[1] and N.coeff(2, 1) is a.n[2]


def test_constant_ansatz_is_flat():
    a = Ansatz5D.from_strings("2", "3", "1.5", "-4")
    g, N = build(a)
    R = curvature(canonical_dconnection(g, N), N)
    assert all(e.is_zero for e in R.full.data.flat)


def test_conformal_ansatz_only_h_block_curves(frozen):
    a = Ansatz5D.from_strings("exp(x2^2 + x3^2)", "exp(x2^2 + x3^2)", "1", "1")
    k = kernel_ricci(a)
    R = k.mixed_ricci
    env = sample_points(np.random.default_rng(0), CH, 30)
    vals = values([R[3, 3], R[4, 4], R[0, 0]], env)
    assert np.abs(vals).max() == 0.0
    cf = ricci_closed_form(a)
    assert at(cf.R22) == pytest.approx(frozen["conformal_block"]["R^2_2_origin"], abs=1e-12)


@pytest.mark.parametrize("kw, msg", [
    (dict(g2="0"), "g2"), (dict(g3="v"), "g3"), (dict(h5="y5"), "h5")])
def test_invalid_ansatz_is_rejected(kw, msg):
    args = dict(g2="1", g3="1", h4="1", h5="v")
    args.update(kw)
    with pytest.raises(AnsatzError, match=msg):
        Ansatz5D.from_strings(**args)
    with pytest.raises(ValueError):
        Ansatz5D.from_strings("1", "1", "1", "v", g1=2)


# -- closed forms ---------------------------------------------------------------------

def test_exp2v_closed_form(frozen):
    cf = ricci_closed_form(Ansatz5D.from_strings("1", "1", "1", "exp(2*v)"))
    assert frozen["exp2v"]["printed_R44"] == -1.0
    for v in (-0.7, 0.0, 0.4, 1.3):
        assert at(cf.R44, v=v) == pytest.approx(-1.0, rel=1e-14)


def test_w_example_values(frozen):
    ref = frozen["w_example"]
    a = Ansatz5D.from_strings("1", "1", "1", "v^3 + x2", ["0", "-0.2", "0"])
    p = dict(x2=1.0, v=1.0)
    for variant in ("printed", "corrected"):
        cf = ricci_closed_form(a, variant)
        assert at(cf.beta, **p) == pytest.approx(ref["beta"], rel=1e-14)
        assert at(cf.alpha[1], **p) == pytest.approx(ref["alpha2"], rel=1e-14)
    corrected = ricci_closed_form(a, "corrected")
    assert at(corrected.R4[1], **p) == pytest.approx(0.0, abs=1e-14)
    assert at(kernel_ricci(a).ricci[3, 1], **p) == pytest.approx(ref["kernel_R_42_w2=-1/5"], abs=1e-14)
    plus = a.replace(w=(nd.ZERO, nd.const(0.2), nd.ZERO))
    assert at(kernel_ricci(plus).ricci[3, 1], **p) == pytest.approx(ref["kernel_R_42_w2=1/5"],
                                                                     rel=1e-12)


def test_gamma_variants_against_oracle(frozen):
    ref = frozen["n_kernel"]
    a = Ansatz5D.from_strings("1", "1", "exp(v)", "v^2 + 1", n=["0", "v + v^2/3", "0"])
    p = dict(x1=0.2, x2=0.3, x3=0.1, v=0.7)
    assert at(kernel_ricci(a).ricci[4, 1], **p) == pytest.approx(ref["kernel_R_52"], rel=1e-12)
    assert at(ricci_closed_form(a, "corrected").R5[1], **p) == pytest.approx(ref["with_gamma_half"],
                                                                            rel=1e-12)
    assert at(ricci_closed_form(a, "printed").R5[1], **p) == pytest.approx(
        ref["with_gamma_printed"], rel=1e-12)


def test_unknown_variant():
    with pytest.raises(ValueError):
        ricci_closed_form(Ansatz5D.from_strings("1", "1", "1", "v"), "other")


# -- against the generic kernel ----------------------------------------------------------

def test_corrected_closed_forms_match_kernel(ansaetze):
    for a, env in ansaetze:
        rep = closed_form_vs_kernel(a, env, "corrected", jobs=1)
        assert rep.ok, (rep.failing(), rep.worst, rep.worst_zero)


def test_printed_variant_differs_only_in_mixed_components(ansaetze):
    a, env = ansaetze[0]
    rep = closed_form_vs_kernel(a, env, "printed", jobs=1)
    assert set(rep.failing()) <= {f"R_4{i}" for i in (1, 2, 3)} | {f"R_5{i}" for i in (1, 2, 3)}
    assert rep.failing()
    for name in ("R^2_2", "R^3_3", "R^4_4", "R^5_5"):
        assert rep.max_relative[name] < 1e-8
    assert rep.worst_zero < 1e-10


def test_flat_ansatz_both_sides_zero():
    a = Ansatz5D.from_strings("1", "1", "1", "1")
    env = sample_points(np.random.default_rng(9), CH, 10)
    rep = closed_form_vs_kernel(a, env, "corrected")
    assert rep.skipped_points == [] and rep.worst == 0.0 and rep.worst_zero == 0.0


def test_domain_errors_skip_points():
    a = Ansatz5D.from_strings("1", "1", "1 + v^2", "1/v")
    env = {c: np.array([0.3, 0.0, 0.5]) for c in CH.coords}
    rep = closed_form_vs_kernel(a, env, "corrected")
    assert rep.skipped_points == [1]
    assert rep.ok


def test_zero_pattern_and_block_equalities(ansaetze):
    for a, env in ansaetze[:2]:
        k = kernel_ricci(a)
        Rm, Ric = k.mixed_ricci, k.ricci
        rows = [nd.sub(Rm[1, 1], Rm[2, 2]), nd.sub(Rm[3, 3], Rm[4, 4])]
        rows += [Ric[r, c] for r in range(3) for c in range(5) if r != c]
        rows += [Ric[3, 4], Ric[4, 3]]
        assert np.abs(values(rows, env)).max() < 1e-10


def test_r22_ignores_v_w_and_n(ansaetze):
    a, env = ansaetze[1]
    k0 = kernel_ricci(a).mixed_ricci[1, 1]
    b = a.replace(w=tuple(parse(s, CH) for s in ("v*x3", "sin(v)", "x2^2")),
                  n=tuple(parse(s, CH) for s in ("v^2", "x3*v", "exp(v/3)")))
    k1 = kernel_ricci(b).mixed_ricci[1, 1]
    shifted = dict(env, v=env["v"] * 0.5 + 0.2)
    r0, r1 = values([k0, k1], env), values([k1], shifted)
    assert np.abs(r0[0] - r0[1]).max() < 1e-12
    assert np.abs(r0[1] - r1[0]).max() < 1e-12


def test_alpha_vanishes_without_x_dependence():
    a = Ansatz5D.from_strings("1", "1", "exp(v) + 2", "v^3 + 2")
    assert all(e.is_zero for e in ricci_closed_form(a).alpha)
    # x-dependence of h4 alone still feeds alpha through ln sqrt|h4 h5|
    b = a.replace(h4=parse("exp(v) + x2^2", CH))
    alpha = ricci_closed_form(b).alpha
    assert alpha[0].is_zero and alpha[2].is_zero and not alpha[1].is_zero


# -- sources -------------------------------------------------------------------------------

def test_upsilon4_must_not_depend_on_v():
    with pytest.raises(AnsatzError, match="Upsilon4"):
        SourceSpec.from_strings("0", "x2*v")


def test_einstein_structure_holds(ansaetze):
    for a, env in ansaetze[:2]:
        rows = list(einstein_structure(kernel_ricci(a)).values())
        assert np.abs(values(rows, env)).max() < 1e-9


def test_exp2v_needs_unit_upsilon2():
    a = Ansatz5D.from_strings("1", "1", "1", "exp(2*v)")
    env = sample_points(np.random.default_rng(4), CH, 25)
    assert source_compatibility(a, SourceSpec.from_strings("1", "0"), env).ok
    bad = source_compatibility(a, SourceSpec.from_strings("0", "0"), env)
    assert not bad.ok
    assert bad.field_eqs["G^2_-2"] == pytest.approx(1.0)


def test_vacuum_bundle_is_source_free():
    a = Ansatz5D.from_strings("exp(x2*x3)", "exp(x2*x3)", "1", "v^2",
                              n=["1 - 1/(2*v^2)", "-1/(2*v^2)", "2 - 1/(2*v^2)"])
    env = sample_points(np.random.default_rng(6), CH, 40, ranges={"v": (0.5, 1.5)})
    rep = source_compatibility(a, SourceSpec(), env, tol=1e-6)
    assert rep.ok
