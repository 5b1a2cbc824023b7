import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MODELS
from itava import build, load_model, region_of, saturate
from itava.checks import check_classes, path_agreement
from itava.classgraph import (TIME, ClassGraphError, accepted_words, class_text, dump_classes, export_dot,
                              initial_class)
from itava.generators import random_ita
from itava.semantics import path_feasible


def graph(a, pi=None):
    es = saturate(a)
    return build(a, region_of(pi or {}, es), es)


def test_initial_class_orders_constants(a1):
    es = saturate(a1)
    cls = initial_class(a1, region_of({}, es), es)
    assert class_text(cls, es) == "q0; L1: x = y = 0 < 1"


def test_a1_graph_and_language(a1):
    ca = graph(a1)
    words = {"".join(w) for w in accepted_words(ca, 12)}
    assert words == {"ab" * n for n in range(1, 7)}
    assert ca.states() == {"q0", "q1", "q2", "q3"}


def test_a2_graph_sizes(a2, pi_ref):
    ca = graph(a2, pi_ref)
    assert (len(ca.classes), len(ca.edges)) == (28, 36)
    assert sum(1 for _, lab, _ in ca.edges if lab == 0) == 6
    assert sum(1 for _, lab, _ in ca.edges if lab == 1) == 2


def test_time_successor_is_total_and_terminal_classes_loop(a2, pi_ref):
    ca = graph(a2, pi_ref)
    succ = {}
    for s, lab, d in ca.edges:
        if lab == TIME:
            assert s not in succ
            succ[s] = d
    assert set(succ) == set(range(len(ca.classes)))
    # following time from any class ends in a self-loop within a few steps
    for i in succ:
        seen = [i]
        while succ[seen[-1]] != seen[-1]:
            seen.append(succ[seen[-1]])
            assert len(seen) <= len(ca.classes)


def test_witness_paths_are_concrete(a2, pi_ref):
    ca = graph(a2, pi_ref)
    for i in range(len(ca.classes)):
        assert path_feasible(a2, ca.path_to(i), pi_ref, cap=64).feasible


def test_sampled_properties_on_a1_and_a2(a1, a2, pi_ref):
    for a, pi in ((a1, {}), (a2, pi_ref)):
        ca = graph(a, pi)
        rep = check_classes(ca, pi, random.Random(0))
        rep.merge(path_agreement(ca, 8, pi))
        assert rep.ok, rep.violations[:3]
        assert rep.samples == 10 * rep.classes


def test_three_levels_graph():
    a = load_model(MODELS / "three_levels.pita")
    ca = graph(a)
    assert "done" in ca.states()
    rep = check_classes(ca, {}, random.Random(1))
    rep.merge(path_agreement(ca, 8))
    assert rep.ok, rep.violations[:3]


def test_class_cap(a2, pi_ref):
    es = saturate(a2)
    with pytest.raises(ClassGraphError):
        build(a2, region_of(pi_ref, es), es, cap=10)


def test_early_stop_on_targets(a2, pi_ref):
    es = saturate(a2)
    ca = build(a2, region_of(pi_ref, es), es, targets=["q2"])
    hit = ca.find(["q2"])
    assert hit is not None and len(ca.classes) < 28


def test_outputs_are_deterministic(a2, pi_ref):
    d1, d2 = export_dot(graph(a2, pi_ref)), export_dot(graph(a2, pi_ref))
    assert d1 == d2 and d1.startswith("digraph classes {")
    assert dump_classes(graph(a2, pi_ref)) == dump_classes(graph(a2, pi_ref))


@settings(max_examples=25, deadline=None)
@given(st.integers(1000, 100_000))
def test_random_itas_are_bisimilar_on_samples(seed):
    a = random_ita(seed, levels=2, max_aux=2, max_states=4)
    ca = graph(a)
    rep = check_classes(ca, {}, random.Random(seed), samples=4)
    rep.merge(path_agreement(ca, 6))
    assert rep.ok, rep.violations[:3]
