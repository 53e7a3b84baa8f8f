import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sinhgordon import DomainError, LayerPoint, ProblemParams, TwoTerm
from sinhgordon import asymptotics as A

gammas = st.floats(0.1, 5.0)
a0s = st.floats(0.05, 8.0)
dims = st.floats(1.05, 5.0)
radii = st.floats(0.3, 5.0)
FORMS = A.CURVATURE_FORMS


def params(N=2.0, R=1.0, gamma=1.0, a0=2.0, eps=0.01):
    return ProblemParams(N, R, gamma, a0, eps)


# --- b ---------------------------------------------------------------------

def test_b_trivial():
    assert A.solve_b(params(a0=0.0)) == 0.0


@pytest.mark.parametrize("gamma,b", [(1.0, 1.0), (2.0, 0.5), (0.3, 2.7)])
def test_b_forward_evaluation_oracle(gamma, b):
    a0 = b + 2 * gamma * math.sinh(b / 2)
    assert A.solve_b(params(gamma=gamma, a0=a0)) == pytest.approx(b, rel=1e-14)


def test_b_reference_value(oracle):
    assert A.solve_b(params()) == pytest.approx(oracle["b_ref"], rel=1e-14)


@given(gammas, a0s)
def test_b_residual_and_bracket(gamma, a0):
    b = A.solve_b(params(gamma=gamma, a0=a0))
    assert 0 < b < a0
    assert abs(A.b_residual(b, gamma, a0)) <= 1e-13 * max(1.0, a0)


@given(gammas, a0s, st.floats(1e-3, 1.0))
def test_b_strictly_increasing(gamma, a0, da):
    assert A.solve_b(params(gamma=gamma, a0=a0 + da)) > A.solve_b(params(gamma=gamma, a0=a0))


# --- boundary expansions ---------------------------------------------------

def test_boundary_trivial():
    c2, uR2, duR2 = A.expand_boundary(params(a0=0.0))
    assert c2.value(0.01) == 1.0 and uR2.value(0.01) == 0.0 and duR2.value(0.01) == 0.0


def test_boundary_N3_b1(oracle):
    o = oracle["boundary_N3_b1"]
    p = params(N=3.0, a0=1 + 2 * math.sinh(0.5))
    c2, uR2, duR2 = A.expand_boundary(p)
    assert c2.value(0.01) == pytest.approx(1 - 0.06 * (math.cosh(0.5) - 1), rel=1e-14)
    assert c2.value(0.01) == pytest.approx(o["c2"], rel=1e-14)
    assert uR2.value(0.01) == pytest.approx(o["uR2"], rel=1e-13)
    assert duR2.value(0.01) == pytest.approx(o["duR2"], rel=1e-13)


def test_boundary_reference(oracle, ref):
    o = oracle["boundary_ref_eps001"]
    c2, uR2, duR2 = A.expand_boundary(ref)
    vR2, dvR2, *_ = A.local_model_expansions(ref, LayerPoint(0.0))
    for got, key in [(c2, "c2"), (uR2, "uR2"), (duR2, "duR2"), (vR2, "vR2"), (dvR2, "dvR2")]:
        assert got.value(0.01) == pytest.approx(o[key], rel=1e-13)


def test_boundary_large_radius_limit():
    p = params(R=1e12)
    b = A.solve_b(p)
    _, uR2, duR2 = A.expand_boundary(p)
    assert uR2.value(0.01) == pytest.approx(b, rel=1e-10)
    assert duR2.value(0.01) == pytest.approx(2 * math.sinh(b / 2) / 0.01, rel=1e-10)


@given(dims, radii, gammas, a0s, st.floats(1e-4, 0.05))
def test_c2_below_one(N, R, gamma, a0, eps):
    c2, _, _ = A.expand_boundary(params(N, R, gamma, a0, eps))
    assert c2.value(eps) <= 1.0
    assert c2.value(eps / 10) > c2.value(eps) or a0 == 0


# --- DtN map ---------------------------------------------------------------

@given(dims, radii, gammas, a0s)
def test_dtn_reproduces_boundary_slope(N, R, gamma, a0):
    p = params(N, R, gamma, a0)
    _, uR2, duR2 = A.expand_boundary(p)
    dtn = A.dtn_two_term(p, uR2)
    assert dtn.lead == pytest.approx(duR2.lead, rel=1e-12)
    assert dtn.corr == pytest.approx(duR2.corr, rel=1e-12, abs=1e-12)


def test_dtn_large_radius_and_precondition():
    p = params(R=1e14)
    assert A.dtn_two_term(p, TwoTerm(1.0, 0.0)).value(0.01) == pytest.approx(2 * math.sinh(0.5) / 0.01)
    with pytest.raises(DomainError):
        A.dtn_two_term(params(), TwoTerm(0.0, 1.0))
    with pytest.raises(DomainError):
        A.dtn_two_term(params(), TwoTerm(-0.3, 0.0))


# --- k(p) ------------------------------------------------------------------

def test_k_at_zero_is_b():
    p = params()
    assert A.solve_k_of_p(p, 0.0) == A.solve_b(p)


def test_k_rejects_negative_p():
    with pytest.raises(DomainError):
        A.solve_k_of_p(params(), -0.1)


def test_k_bisection_oracle(oracle):
    p = params(N=3.0, a0=1 + 2 * math.sinh(0.5))
    k = A.solve_k_of_p(p, 1.0)
    assert k == pytest.approx(oracle["k_N3_b1_p1"], rel=1e-13)
    assert abs(A.layer_depth(k, 1.0, 3.0, 1.0) - 1.0) < 1e-12


def test_k_first_order_is_flat_profile():
    p = params()
    b = A.solve_b(p)
    for pp in (0.3, 1.0, 4.0):
        k = A.solve_k_of_p(p, pp, curvature="first-order")
        assert k == pytest.approx(4 * math.atanh(math.tanh(b / 4) * math.exp(-pp)), rel=1e-13)


@settings(max_examples=60)
@given(dims, radii, a0s, st.floats(0.0, 20.0), st.floats(1e-3, 3.0), st.sampled_from(FORMS))
def test_k_monotone_and_in_range(N, R, a0, p1, dp, form):
    p = params(N, R, 1.0, a0)
    b = A.solve_b(p)
    k1 = A.solve_k_of_p(p, p1, curvature=form)
    k2 = A.solve_k_of_p(p, p1 + dp, curvature=form)
    assert 0 < k2 < k1 <= b
    assert abs(A.layer_depth(k1, b, N, R, form) - p1) <= 1e-12 * max(1.0, p1)


def test_k_tends_to_zero():
    assert 0 < A.solve_k_of_p(params(), 60.0) < 1e-15


def test_unknown_curvature_rejected():
    with pytest.raises(ValueError):
        A.solve_k_of_p(params(), 1.0, curvature="bogus")


# --- layer expansions ------------------------------------------------------

def test_layer_reference_oracle(oracle, ref):
    o = oracle["layer_ref_p1_q03"]
    pt = LayerPoint(1.0, 0.3)
    u2, du2, H = A.layer_expansion(ref, pt)
    _, _, v2, _, Hs = A.local_model_expansions(ref, pt)
    assert H == pytest.approx(o["H"], rel=1e-12)
    assert Hs == pytest.approx(o["H_sharp"], rel=1e-12)
    assert u2.value(0.01) == pytest.approx(o["u2"], rel=1e-13)
    assert du2.value(0.01) == pytest.approx(o["du2"], rel=1e-13)
    assert v2.value(0.01) == pytest.approx(o["v2"], rel=1e-13)
    assert list(A.comparison_limits(ref, pt)) == pytest.approx(
        [o["lim_boundary"], o["lim_value"], o["lim_slope"]], rel=1e-12)


def test_comparison_limits_N2_b1(oracle):
    o = oracle["layer_N2_b1_p1"]
    p = params(a0=1 + 2 * math.sinh(0.5))
    assert list(A.comparison_limits(p, LayerPoint(1.0))) == pytest.approx(
        [o["lim_boundary"], o["lim_value"], o["lim_slope"]], rel=1e-12)


@given(dims, radii, gammas, a0s, st.sampled_from(FORMS))
def test_layer_origin_reproduces_boundary(N, R, gamma, a0, form):
    p = params(N, R, gamma, a0)
    _, uR2, duR2 = A.expand_boundary(p)
    u2, du2, _ = A.layer_expansion(p, LayerPoint(0.0, 0.0), form)
    assert u2.lead == uR2.lead
    assert u2.corr == pytest.approx(uR2.corr, rel=1e-12, abs=1e-14)
    assert du2.lead == pytest.approx(duR2.lead, rel=1e-14)
    assert du2.corr == pytest.approx(duR2.corr, rel=1e-12, abs=1e-14)
    vR2, dvR2, v2, dv2, Hs = A.local_model_expansions(p, LayerPoint(0.0, 0.0), form)
    assert v2.corr == pytest.approx(vR2.corr, rel=1e-12, abs=1e-14)
    assert dv2.corr == pytest.approx(dvR2.corr, rel=1e-12, abs=1e-14)
    assert v2.corr == pytest.approx(Hs * math.sinh(A.solve_b(p) / 2) / R, rel=1e-14, abs=1e-16)


@given(dims, radii, gammas, a0s, st.sampled_from(FORMS))
def test_half_height_point(N, R, gamma, a0, form):
    p = params(N, R, gamma, a0)
    _, uR2, _ = A.expand_boundary(p)
    u2, du2, _ = A.layer_expansion(p, LayerPoint(0.0, A.half_height_depth(p, form)), form)
    assert u2.corr == pytest.approx(0.5 * uR2.corr, rel=1e-12, abs=1e-15)
    slope = A.half_height_slope(p)
    assert du2.lead == pytest.approx(slope.lead, rel=1e-14)
    assert du2.corr == pytest.approx(slope.corr, rel=1e-12, abs=1e-13)


@given(dims, radii, gammas, a0s, st.floats(0.0, 5.0), st.floats(-3.0, 3.0), st.sampled_from(FORMS))
def test_nonlocal_local_gap_identities(N, R, gamma, a0, pp, q, form):
    p = params(N, R, gamma, a0)
    pt = LayerPoint(pp, q)
    u2, du2, _ = A.layer_expansion(p, pt, form)
    _, _, v2, dv2, _ = A.local_model_expansions(p, pt, form)
    boundary, value, slope = A.comparison_limits(p, pt, form)
    assert u2.lead == v2.lead
    assert (u2.corr - v2.corr) == pytest.approx(value, rel=1e-10, abs=1e-13)
    assert (du2.corr - dv2.corr) == pytest.approx(slope, rel=1e-10, abs=1e-13)
    # the slope gap does not depend on q
    assert A.comparison_limits(p, LayerPoint(pp, q + 1.0), form)[2] == pytest.approx(slope, rel=1e-12, abs=1e-15)


@given(dims, radii, gammas, a0s)
def test_boundary_gap_chain(N, R, gamma, a0):
    p = params(N, R, gamma, a0)
    boundary, value, slope = A.comparison_limits(p, LayerPoint(0.0))
    assert boundary == pytest.approx(-gamma * slope, rel=1e-12)
    assert value == pytest.approx(boundary, rel=1e-12)
    vR2 = A.local_model_expansions(p, LayerPoint(0.0))[0]
    assert boundary == pytest.approx(A.expand_boundary(p)[1].corr - vR2.corr, rel=1e-10)


def test_curvature_forms_agree_for_N_one_limit():
    # (N-1) factors switch the curvature terms off entirely
    p = params(N=1.0 + 1e-14)
    pt = LayerPoint(1.3, 0.4)
    a = A.layer_expansion(p, pt, "leading")
    b = A.layer_expansion(p, pt, "first-order")
    assert a[0].lead == pytest.approx(b[0].lead, rel=1e-12)
    assert a[2] == pytest.approx(b[2], rel=1e-12)
    vR2 = A.local_model_expansions(p, pt)[0]
    assert vR2.corr == pytest.approx(0.0, abs=1e-12)


def test_trivial_expansions_vanish():
    p = params(a0=0.0)
    pt = LayerPoint(1.0, 0.5)
    u2, du2, H = A.layer_expansion(p, pt)
    assert (u2.value(0.01), du2.value(0.01), H) == (0.0, 0.0, 0.0)
    assert A.comparison_limits(p, pt) == (0.0, 0.0, 0.0)
    assert all(x.value(0.01) == 0.0 for x in A.local_model_expansions(p, pt)[:4])
    assert A.expansion_report(p, pt).trivial


@settings(max_examples=50)
@given(dims, radii, gammas, a0s, st.floats(0.0, 4.0), st.floats(-2.0, 2.0), st.sampled_from(FORMS))
def test_odd_symmetry(N, R, gamma, a0, pp, q, form):
    pos, neg = params(N, R, gamma, a0), params(N, R, gamma, -a0)
    pt = LayerPoint(pp, q)
    assert A.solve_b(neg) == -A.solve_b(pos)
    for x, y in zip(A.expand_boundary(pos)[1:], A.expand_boundary(neg)[1:]):
        assert y.lead == pytest.approx(-x.lead) and y.corr == pytest.approx(-x.corr)
    assert A.expand_boundary(neg)[0] == A.expand_boundary(pos)[0]
    for x, y in zip(A.layer_expansion(pos, pt, form)[:2], A.layer_expansion(neg, pt, form)[:2]):
        assert y.lead == pytest.approx(-x.lead, rel=1e-12) and y.corr == pytest.approx(-x.corr, rel=1e-10, abs=1e-12)
    assert A.comparison_limits(neg, pt, form) == pytest.approx(
        tuple(-v for v in A.comparison_limits(pos, pt, form)), rel=1e-12, abs=1e-14)


# --- decay envelope --------------------------------------------------------

def test_envelope_values():
    p = params()
    assert A.decay_envelope(p, 1.0) == 4.0
    assert A.decay_envelope(params(eps=1e-4), 0.0) < 1e-100
    with pytest.raises(DomainError):
        A.decay_envelope(p, 1.1)
    with pytest.raises(DomainError):
        A.decay_envelope(p, -0.1)
    bound = A.decay_bound(p)
    assert bound.rate > 0 and bound.amplitude == 4.0


@given(st.floats(0.0, 0.99), st.floats(1e-3, 0.1))
def test_envelope_monotone_and_eps_scaling(r, eps):
    p = params(eps=eps)
    assume(r + 0.005 <= 1.0)
    assert A.decay_envelope(p, r) < A.decay_envelope(p, r + 0.005) or A.decay_envelope(p, r) == 0.0
    # halving eps doubles the exponent
    e1 = A.decay_envelope(p, r) / 4.0
    e2 = A.decay_envelope(p.with_eps(eps / 2), r) / 4.0
    if e1 > 1e-150:
        assert math.log(e2) == pytest.approx(2 * math.log(e1), rel=1e-10)


def test_report_round_trip(ref):
    rep = A.expansion_report(ref, LayerPoint(1.0, 0.3), curvature="first-order")
    d = rep.to_dict()
    assert d["curvature"] == "first-order"
    assert d["uR2"]["value"] == pytest.approx(A.expand_boundary(ref)[1].value(0.01))
    assert d["dtn2"]["lead"] == pytest.approx(d["duR2"]["lead"])
    assert len(d["diff_limits"]) == 3
