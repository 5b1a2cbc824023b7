from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CORPUS, MODELS
from itava import load_model, parse_model, parse_scope, parse_valuation, print_model
from itava.frontend import ModelError, ParseError, parse_document
from itava.generators import random_additive, random_ita
from itava.smt import formula_holds


def roundtrip(a):
    text = print_model(a)
    b = parse_model(text)
    assert print_model(b) == text
    return b


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_roundtrip(path):
    a = load_model(path)
    b = roundtrip(a)
    assert b.transitions == a.transitions
    assert b.states == a.states


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_random_models_roundtrip(seed):
    for a in (random_ita(seed), random_additive(seed)):
        assert roundtrip(a).transitions == a.transitions


def test_exact_decimals_and_fractions():
    a = parse_model("""ita D { levels 1; level 1 { main x; }
        state q level 1 init; state r level 1 final;
        trans q -> r when x = 0.1 + 2/3; }""")
    (atom,) = a.transitions[0].guard
    assert atom.expr.evaluate({"x": Fraction(0)}) == -(Fraction(1, 10) + Fraction(2, 3))


def test_exponent_on_clock_is_rejected():
    with pytest.raises(ParseError, match="exponent on non-parameter"):
        parse_model("""pita E { params p; levels 1; level 1 { main x; }
            state q level 1 init; trans q -> q when x^2 < p; }""")


def test_nonlinear_in_clocks_is_rejected():
    with pytest.raises(ParseError, match="not linear"):
        parse_model("""pita E { params p; levels 1; level 1 { main x; aux y; }
            state q level 1 init; trans q -> q when x*y < p; }""")


def test_error_positions():
    with pytest.raises(ParseError) as e:
        parse_model("ita X {\n  levels 1;\n  level 1 { main x; }\n  state q level 1 init\n}")
    assert str(e.value).startswith("5:")


def test_violations_carry_source_lines():
    doc = parse_document("""ita V { levels 2; level 1 { main x1; } level 2 { main x2; }
        state a level 1 init;
        state b level 2;
        trans a -> b do x1 := x2; }""")
    from itava.model import validate
    described = [doc.describe(v) for v in validate(doc.automaton)]
    assert described and all(d.startswith("line 4:") for d in described)
    with pytest.raises(ModelError):
        parse_model("""ita V { levels 2; level 1 { main x1; } level 2 { main x2; }
            state a level 1 init; state b level 2;
            trans a -> b do x1 := x2; }""")


def test_parameter_polynomials_and_powers():
    a = load_model(MODELS / "a2.pita")
    upd = dict(a.transitions[1].update)["x2"]
    assert upd.evaluate({"x1": Fraction(4), "x2": Fraction(2)}, {"p1": 5, "p2": -1}) == 3


def test_scope_parsing():
    f = parse_scope("p1 <= 0 and p2 = 0", ("p1", "p2"))
    assert formula_holds(f, {"p1": Fraction(-1), "p2": Fraction(0)})
    assert not formula_holds(f, {"p1": Fraction(1), "p2": Fraction(0)})
    g = parse_scope("(p1 > 1 or p1 < -1) and p2^2 < 4", ("p1", "p2"))
    assert formula_holds(g, {"p1": Fraction(2), "p2": Fraction(1)})
    assert not formula_holds(g, {"p1": Fraction(0), "p2": Fraction(1)})
    assert parse_scope("(exists ((t Real)) (= p1 (* t t)))", ("p1",)).kind == "raw"
    with pytest.raises(ParseError, match="non-parameters"):
        parse_scope("x1 < 2", ("p1",))


def test_valuation_parsing():
    assert parse_valuation("p1 = 5; p2 = -1\n# comment\np3 = 1/2") == \
        {"p1": 5, "p2": -1, "p3": Fraction(1, 2)}
    with pytest.raises(ParseError):
        parse_valuation("p1 = q")
