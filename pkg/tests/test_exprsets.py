import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itava import check_bounds, saturate
from itava.arith import Poly, RatFun
from itava.exprsets import SaturationError, apply_update, decompose, normalize
from itava.generators import random_additive, random_ita
from itava.model import ClockExpr, LinearAtom

P1, P2 = RatFun.lift(Poly.var("p1")), RatFun.lift(Poly.var("p2"))


def texts(es, k):
    return sorted(str(e) for e in es.exprs[k])


def test_a1_expressions(a1):
    es = saturate(a1)
    assert es.polpar == []
    assert texts(es, 1) == ["0", "1", "x", "y"]


def test_a2_faithful_output(a2):
    t0 = time.perf_counter()
    es = saturate(a2)
    assert time.perf_counter() - t0 < 1
    assert [str(p) for p in es.polpar] == ["p2", "p1 - 4*p2^2", "1 - p1 + 4*p2^2", "1 + p2",
                                           "1 + p1*p2 - 4*p2^3"]
    assert texts(es, 2) == sorted(["x2", "0", "x1 - 2", "(-x1 + 2)/p2", "(p1 - 4*p2^2)*x1 + p2"])
    # the nine printed members plus the pair coming from the difference with 0
    assert len(es.exprs[1]) == 11
    assert {"-p2", "-p2/(p1 - 4*p2^2)"} <= set(texts(es, 1))


def test_decomposition_of_the_a2_guard(a2):
    g = a2.transitions[1].guard[0].expr  # x1 + p2*x2 - 2
    d = decompose(g, 2, a2)
    assert d.lead == Poly.var("p2")
    assert str(d.comp) == "x1 - 2"
    assert d.compnorm == ClockExpr({"x1": -1 / P2}, 2 / P2)
    assert normalize(g, 2, a2) == ClockExpr({"x1": 1 / P2, "x2": 1}, -2 / P2)


def test_constant_lead_has_no_comp(a1):
    d = decompose(ClockExpr({"x": 2}, -1), 1, a1)
    assert d.comp is None and d.compnorm == ClockExpr.constant(RatFun.lift(Poly.const(1)) / 2)
    d = decompose(ClockExpr({}, 3), 1, a1)
    assert d.lead.is_zero() and d.compnorm is None and d.comp == ClockExpr.constant(3)


def test_cap(a2):
    with pytest.raises(SaturationError, match="E_1"):
        saturate(a2, cap=6)
    assert len(saturate(a2, cap=11).exprs[1]) == 11


def models(seed):
    return [random_ita(seed), random_additive(seed)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 50_000))
def test_saturation_invariants(seed):
    for a in models(seed):
        es = saturate(a)
        level = {s.name: s.level for s in a.states}
        for k in range(1, a.levels + 1):
            members = list(es.exprs[k])
            # each member lives on clocks of level <= k, with at most the level-k clock itself
            for e in members:
                assert all(a.level_of(z) <= k for z in e.clocks())
            for t in a.transitions:
                if level[t.source] == k:
                    for g in t.guard:
                        if isinstance(g, LinearAtom):
                            d = decompose(g.expr, k, a)
                            assert d.compnorm is None or d.compnorm in members
                            assert d.comp is None or d.comp in members
                            assert d.lead.is_constant() or d.lead.normalized()[1] in es.polpar
                if level[t.source] >= k and level[t.target] >= k and t.update:
                    for e in members:
                        assert apply_update(e, t.update) in members
        assert check_bounds(es, a).ok


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 50_000))
def test_saturation_is_deterministic(seed):
    a = random_additive(seed)
    assert saturate(a).dump() == saturate(a).dump()


def test_decomposition_identity(a2):
    # a_k*x_k + rest == C and a_k*compnorm == -rest
    for e in [ClockExpr({"x1": P1 - 1, "x2": P2}, 3), ClockExpr({"x2": P1 * P2, "x1": 2}, P2)]:
        d = decompose(e, 2, a2)
        ak = e.coeff("x2")
        rest = e.drop({"x2"})
        assert ak.num == d.lead
        assert d.compnorm.scale(ak) == -rest
