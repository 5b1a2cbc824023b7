from fractions import Fraction

import pytest

from conftest import MODELS
from itava import load_model, parse_model
from itava.model import (ClockExpr, DiffAtom, LinearAtom, Transition, classify_update, desugar_policies,
                         reset_implicit, validate)
from itava.semantics import Delay, Fire, SemanticsError, run

TWO_LEVELS = """ita T {
  levels 2;
  level 1 { main x1; aux y1; }
  level 2 { main x2; aux y2; }
  state a level 1 init;
  state b level 2 final;
  trans a -> b on go when x1 > 1;
}"""


def rules(a):
    return [v.rule for v in validate(a)]


@pytest.fixture
def t2():
    return parse_model(TWO_LEVELS)


def with_transition(a, **kw):
    base = dict(source="a", target="b", guard=(), label="go", update=())
    base.update(kw)
    return a.with_transitions(a.transitions + (Transition(**base),))


def test_valid_models_have_no_violations():
    for path in sorted(MODELS.glob("*.pita")):
        a = desugar_policies(load_model(path))
        assert validate(a) == [], path.name


def test_update_classification(t2):
    e = ClockExpr
    assert classify_update(t2, "x2", e.clock("x2")) == "unchanged"
    assert classify_update(t2, "y2", e.clock("x2")) == "copy"
    assert classify_update(t2, "x2", e({"x1": 3}, 1)) == "lower"
    assert classify_update(t2, "x2", e.constant(4)) == "lower"
    assert classify_update(t2, "x2", e({"y1": 1})) == "invalid"  # auxiliary clock of a lower level
    assert classify_update(t2, "x1", e({"x2": 1})) == "invalid"  # higher level


def test_guard_with_two_clocks_of_the_source_level(t2):
    bad = with_transition(t2, guard=(LinearAtom(ClockExpr({"x1": 1, "y1": 1}, -1), "<"),))
    assert any("more than one clock" in r for r in rules(bad))


def test_guard_on_a_higher_level_clock(t2):
    bad = with_transition(t2, guard=(LinearAtom(ClockExpr({"x2": 1}, -1), "<"),))
    assert any("clock x2" in r for r in rules(bad))


def test_difference_guard_must_stay_at_the_source_level(t2):
    ok = with_transition(t2, guard=(DiffAtom("x1", "y1", "<"),))
    assert rules(ok) == []
    bad = with_transition(t2, guard=(DiffAtom("x1", "x2", "<"),))
    assert any("difference of clocks" in r for r in rules(bad))


def test_copy_into_a_main_clock_needs_a_same_level_loop(t2):
    ok = with_transition(t2, source="b", target="b", update=(("x2", ClockExpr.clock("y2")),))
    assert rules(ok) == []
    bad = with_transition(t2, update=(("x1", ClockExpr.clock("y1")),))
    assert any("copy into x1" in r for r in rules(bad))


def test_level_down_resets(t2):
    down = with_transition(t2, source="b", target="a", update=(("x2", ClockExpr.constant(1)),))
    assert any("must be reset to 0" in r for r in rules(down))
    implicit = reset_implicit(with_transition(t2, source="b", target="a"))
    assert rules(implicit) == []
    assert dict(implicit.transitions[-1].update) == {"x2": ClockExpr.constant(0), "y2": ClockExpr.constant(0)}


def test_structural_violations(t2):
    from dataclasses import replace
    assert any("initial state" in r for r in rules(replace(t2, states=tuple(replace(s, initial=False)
                                                                            for s in t2.states))))
    assert any("main clock" in r for r in rules(replace(t2, clocks=t2.clocks[1:])))
    bad_act = replace(t2, states=(t2.states[0], replace(t2.states[1], act="x1")))
    assert any("not at the state level" in r for r in rules(bad_act))


def test_policies_are_flagged_then_desugared():
    a = load_model(MODELS / "policies.pita")
    assert any("policy annotation" in r for r in rules(a))
    d = desugar_policies(a)
    assert rules(d) == []
    assert all(s.policy == "lazy" for s in d.states)
    assert len(d.clocks) == len(a.clocks) + 1


def test_urgent_and_delayed_semantics():
    d = desugar_policies(load_model(MODELS / "policies.pita"))
    # s1 is urgent: ack must fire without delay
    run(d, [Delay(1), Fire(0), Fire(1)])
    with pytest.raises(SemanticsError):
        run(d, [Delay(1), Fire(0), Delay(Fraction(1, 2)), Fire(1)])
    # s2 is delayed: done needs some time to elapse first
    with pytest.raises(SemanticsError):
        run(d, [Delay(1), Fire(0), Fire(1), Fire(2)])
    end = run(d, [Delay(1), Fire(0), Fire(1), Delay(Fraction(1, 2)), Fire(2)])[-1]
    assert end.state == "s3"
