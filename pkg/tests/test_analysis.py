from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MODELS, needs_z3
from itava import (existential_reach, load_model, parse_model, parse_scope, path_feasible, reduce_additive,
                   robust_reach, universal_reach)
from itava.analysis import (AnalysisError, Rule, additive_reach, compile_planning, is_additive, plan_exists,
                            reach, trim)
from itava.frontend import print_model
from itava.generators import random_ita, random_planning
from itava.model import validate

SINGLE = """pita G { params p1; levels 1; level 1 { main x1; }
  state q0 level 1 init; state q1 level 1 final;
  trans q0 -> q1 on a when x1 = p1; }"""

ADDITIVE = """pita K { params p1 p2; levels 2;
  level 1 { main x1; } level 2 { main x2; }
  state q0 level 1 init; state q1 level 2; state q2 level 1 final;
  trans q0 -> q1 on a when x1 < p1 + 1;
  trans q1 -> q1 on b when x2 = p2;
  trans q1 -> q2 on c when x2 > p1 - p2;
  trans q0 -> q0 on d when x1 = 2; }"""


def test_a2_existential_witness_is_checkable(a2, z3):
    v = existential_reach(a2, ["q2"], solver=z3)
    assert v.answer == "Yes" and v.exit_code == 0
    assert path_feasible(a2, v.abstract_path, v.witness_valuation).feasible
    assert v.witness_path == ["t0 a q1->q2"]
    assert v.witness_delays == []  # a fires at x1 = 0 once p1 > 0


def test_a2_scoped_no(a2, z3):
    scope = parse_scope("p1 <= 0 and p2 = 0", a2.params)
    v = existential_reach(a2, ["q2"], scope=scope, solver=z3)
    assert v.answer == "No" and v.exit_code == 1
    # independent check: a needs x1 < p1 <= 0 with x1 >= 0
    for p1 in (0, -1, Fraction(-1, 2)):
        assert not path_feasible(a2, ["delay", 0], {"p1": p1, "p2": 0}).feasible


def test_a2_universal_fails_where_p1_is_not_positive(a2, z3):
    v = universal_reach(a2, ["q2"], solver=z3)
    assert v.answer == "No"
    assert v.witness_valuation["p1"] <= 0
    assert not path_feasible(a2, ["delay", 0], v.witness_valuation).feasible


def test_universal_with_the_initial_state_as_target(a2, z3):
    assert universal_reach(a2, ["q1"], solver=z3).answer == "Yes"


def test_single_parameter_scoped_universal(z3):
    a = parse_model(SINGLE)
    assert universal_reach(a, solver=z3).answer == "No"
    assert universal_reach(a, scope=parse_scope("p1 >= 0", a.params), solver=z3).answer == "Yes"


def test_pinned_model_is_not_robust(z3):
    a = load_model(MODELS / "pinned.pita")
    v = existential_reach(a, solver=z3)
    assert v.answer == "Yes" and v.witness_valuation == {"p1": 1}
    assert robust_reach(a, solver=z3).answer == "No"


def test_robust_a2_region_is_open(a2, z3):
    v = robust_reach(a2, solver=z3)
    assert v.answer == "Yes" and v.region.open_only
    assert all(" = " not in line for line in v.witness_region)


def test_itas_agree_across_modes():
    for seed in range(8):
        a = random_ita(seed)
        answers = {reach(a, m).answer for m in ("exist", "forall", "robust")}
        assert len(answers) == 1


def test_unreachable_ita():
    a = parse_model("""ita U { levels 1; level 1 { main x1; }
        state q0 level 1 init; state q1 level 1 final;
        trans q0 -> q1 when x1 < 0; }""")
    assert existential_reach(a).answer == "No"


def test_unknown_targets_and_modes(a2):
    with pytest.raises(AnalysisError, match="unknown target"):
        existential_reach(a2, ["nope"])
    with pytest.raises(AnalysisError, match="mode"):
        reach(a2, "sometimes")


def test_sampling_backend_reports_unknown_for_universal(a2):
    # without an exact solver empty candidates cannot be refuted
    v = universal_reach(a2, ["q1"])
    assert v.answer in ("Unknown", "Yes")
    assert v.answer == "Unknown" or v.stats["inconclusive_regions"] == 0


def test_trim_keeps_only_useful_states():
    a = parse_model(ADDITIVE)
    t = trim(a, ["q1"])
    assert {s.name for s in t.states} == {"q0", "q1"}
    assert len(t.transitions) == 3


def test_witness_indices_refer_to_the_input(z3):
    a = parse_model(ADDITIVE)
    v = existential_reach(a, ["q2"], solver=z3)
    assert v.answer == "Yes"
    assert path_feasible(a, v.abstract_path, v.witness_valuation).feasible


# additive reduction ---------------------------------------------------------

def test_reduction_size_contract():
    a = parse_model(ADDITIVE)
    r = reduce_additive(a)
    k = len(a.params)
    assert validate(r) == [] and r.params == ()
    assert len(r.states) == len(a.states) + 2 * k + 1
    assert len(r.transitions) == len(a.transitions) + 3 * k + 1
    assert len(r.clocks) == len(a.clocks) + k + 1
    assert r.levels == a.levels + k + 1


def test_reduction_without_parameters(a1):
    r = reduce_additive(a1)
    assert r.levels == a1.levels + 1
    assert len(r.transitions) == len(a1.transitions) + 1
    assert existential_reach(r).answer == existential_reach(a1).answer == "Yes"


def test_reduction_rejects_multiplicative_parameters(a2):
    assert not is_additive(a2)
    with pytest.raises(AnalysisError, match="additive"):
        reduce_additive(a2)


@needs_z3
def test_additive_paths_agree(z3):
    a = parse_model(SINGLE)
    for scope, want in ((None, "Yes"), ("p1 < 0", "No"), ("p1 > 3", "Yes")):
        sc = parse_scope(scope, a.params) if scope else None
        assert existential_reach(a, scope=sc, solver=z3).answer == want
        assert additive_reach(a, scope=sc, solver=z3).answer == want


@needs_z3
def test_scope_monotonicity(z3):
    a = parse_model(ADDITIVE)
    nested = ["true", "p1 > -3", "p1 > -3 and p2 > 0", "p1 > -3 and p2 > 0 and p1 < p2"]
    answers = [existential_reach(a, scope=parse_scope(s, a.params), solver=z3).answer for s in nested]
    for wide, narrow in zip(answers, answers[1:]):
        assert not (wide == "No" and narrow == "Yes")


def test_robust_implies_existential_on_the_corpus():
    for path in sorted(MODELS.glob("*.pita")):
        a = load_model(path)
        if robust_reach(a).answer == "Yes":
            assert existential_reach(a).answer == "Yes", path.name


# planning ---------------------------------------------------------------------

def test_small_planning_instance():
    rules = [Rule(((0, False),), ((0, True), (1, False))), Rule(((0, True),), ((1, True),))]
    a, goal = compile_planning(2, rules)
    assert plan_exists(2, rules)
    v = existential_reach(a, [goal])
    assert v.answer == "Yes"
    fired = [int(s.split()[0][1:]) for s in v.witness_path]
    assert fired == [0, 1, 2]
    assert "y1" in print_model(a)


def test_planning_without_rules():
    a, goal = compile_planning(1, [])
    assert existential_reach(a, [goal]).answer == "No"


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_planning_matches_bfs(seed):
    n, rules = random_planning(seed)
    a, goal = compile_planning(n, rules)
    assert (existential_reach(a, [goal]).answer == "Yes") == plan_exists(n, rules)


def test_verdict_json_is_stable(a2):
    v1, v2 = existential_reach(a2), existential_reach(a2)
    assert v1.dumps() == v2.dumps()
    doc = v1.to_json()
    assert set(doc) == {"answer", "witness_region", "witness_valuation", "witness_path", "witness_delays", "stats"}
    assert all(isinstance(x, str) for x in doc["witness_valuation"].values())
