import random
from fractions import Fraction

import pytest

from conftest import needs_z3, z3_path
from itava import enumerate_regions, parse_model, parse_scope, region_of, saturate
from itava.regions import EnumerationLog, filter_exprs, region_constraints, same_region
from itava.smt import Oracle

SMALL = """pita S { params p q; levels 2; level 1 { main x1; } level 2 { main x2; }
state a level 1 init; state b level 2; state c level 2 final;
trans a -> b on u when x1 > p;
trans b -> c on v when q*x2 = x1 - 1; }"""


@pytest.fixture(scope="module")
def small():
    a = parse_model(SMALL)
    return a, saturate(a)


def regions(es, params, solver, scope=None, open_only=False):
    o = Oracle(params, solver)
    log = EnumerationLog()
    try:
        return list(enumerate_regions(es, o, scope, open_only, log)), log
    finally:
        o.close()


def test_filter_on_the_reference_region(a2, pi_ref):
    es = saturate(a2)
    r = region_of(pi_ref, es)
    keep = filter_exprs(es, r.sigma)
    assert keep[2] == list(range(5))
    names = {str(es.exprs[1][i]) for i in keep[1]}
    assert "(2 + p2)/(1 - p1 + 4*p2^2)" not in names
    assert "(2 - p2^2)/(1 + p1*p2 - 4*p2^3)" not in names
    assert {"x1", "0", "2", "(-2 - 2*p2)/p2", "-2 - p2", "(-2 + p2^2)/p2", "p1"} <= names


def test_reference_region_constraints(a2, pi_ref):
    es = saturate(a2)
    lines = region_constraints(region_of(pi_ref, es), es).lines()
    for atom in ("p2 < 0", "1 + p2 = 0", "1 - p1 + 4*p2^2 = 0", "1 + p1*p2 - 4*p2^3 = 0", "-2 - p2 < 0"):
        assert atom in lines
    assert region_constraints(region_of(pi_ref, es), es).holds(pi_ref)
    assert not region_constraints(region_of(pi_ref, es), es).holds({"p1": 6, "p2": -1})


def test_itas_have_one_region(a1):
    es = saturate(a1)
    rs, log = regions(es, (), None)
    assert len(rs) == 1 and log.inconclusive == 0


@needs_z3
def test_regions_partition_the_parameter_space(small):
    a, es = small
    rs, log = regions(es, a.params, z3_path())
    assert len(rs) == 31 and log.inconclusive == 0
    assert [r.index for r in rs] == list(range(len(rs)))
    systems = [region_constraints(r, es) for r in rs]
    for i, r in enumerate(rs):
        assert same_region(region_of(r.witness, es), r)
        assert [j for j, cs in enumerate(systems) if cs.holds(r.witness)] == [i]
    rng = random.Random(0)
    for _ in range(200):
        pi = {"p": Fraction(rng.randint(-8, 8), rng.randint(1, 4)), "q": Fraction(rng.randint(-8, 8), rng.randint(1, 4))}
        assert sum(cs.holds(pi) for cs in systems) == 1


@needs_z3
def test_open_regions(small):
    a, es = small
    full, _ = regions(es, a.params, z3_path())
    opened, _ = regions(es, a.params, z3_path(), open_only=True)
    assert len(opened) == 12
    for r in opened:
        assert all(op in ("<", ">") for _, op in region_constraints(r, es).atoms)
        assert any(same_region(r, f) for f in full)


@needs_z3
def test_scope_restricts_enumeration(small):
    a, es = small
    scope = parse_scope("q > 0 and p <= 1", a.params)
    rs, _ = regions(es, a.params, z3_path(), scope)
    assert rs
    for r in rs:
        assert r.witness["q"] > 0 and r.witness["p"] <= 1
        assert region_constraints(r, es, scope).holds(r.witness)


@needs_z3
def test_sampling_backend_is_sound(small):
    a, es = small
    exact, _ = regions(es, a.params, z3_path())
    sampled, log = regions(es, a.params, None)
    assert log.inconclusive > 0  # sampling cannot refute the empty candidates
    assert len(sampled) <= len(exact)
    for r in sampled:
        assert any(same_region(r, e) for e in exact)


def test_enumeration_is_deterministic(small):
    a, es = small
    r1, _ = regions(es, a.params, None)
    r2, _ = regions(es, a.params, None)
    assert [(r.signs, r.order1, r.witness) for r in r1] == [(r.signs, r.order1, r.witness) for r in r2]
