from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MODELS
from itava import load_model, path_feasible, simulate_random
from itava.generators import random_ita
from itava.semantics import (DELAY, AbstractPath, Delay, Fire, SemanticsError, delay_interval,
                             delays_witness, initial_config, instantiate, run, step)


def test_reference_run_replay(a2, pi_ref):
    configs = run(a2, [Delay(4), Fire(0), Delay(2), Fire(1)], pi_ref)
    assert [c.state for c in configs] == ["q1", "q1", "q2", "q2", "q2"]
    assert configs[2].v() == {"x1": 4, "x2": 0}
    assert configs[3].v() == {"x1": 4, "x2": 2}
    assert configs[4].v() == {"x1": 4, "x2": 3}


def test_only_the_active_clock_moves(a2, pi_ref):
    c = step(a2, initial_config(a2), Fire(0), pi_ref)
    c = step(a2, c, Delay(Fraction(7, 3)), pi_ref)
    assert c.v() == {"x1": 0, "x2": Fraction(7, 3)}


def test_disabled_guards_and_bad_actions(a2, pi_ref):
    with pytest.raises(SemanticsError, match="guard"):
        run(a2, [Delay(5), Fire(0)], pi_ref)  # x1 < p1 fails at 5
    with pytest.raises(SemanticsError, match="does not leave"):
        run(a2, [Fire(1)], pi_ref)
    with pytest.raises(SemanticsError, match="negative"):
        run(a2, [Delay(-1)], pi_ref)
    with pytest.raises(SemanticsError, match="valuation"):
        run(a2, [Delay(1)])


def test_path_feasibility_on_a2(a2, pi_ref):
    path = AbstractPath.of([DELAY, 0, DELAY, 1])
    res = path_feasible(a2, path, pi_ref)
    assert res.feasible
    assert delays_witness(a2, path, [4, 2], pi_ref)
    assert delays_witness(a2, path, res.delays, pi_ref)
    end = run(a2, res.actions, pi_ref)[-1]
    assert end.state == "q2"
    # b needs x1 + p2*x2 = 2 with x2 >= 0, so x1 >= 2 when p2 < 0
    assert not path_feasible(a2, AbstractPath.of([0, DELAY, 1]), pi_ref).feasible
    assert not delays_witness(a2, path, [1, 0], pi_ref)


def test_a1_needs_strictly_increasing_fractions(a1):
    # q2 -a-> q3 -b-> q2 requires y < x < 1, then y := x
    ok = [DELAY, 0, DELAY, 1, DELAY, 2, DELAY, 3]
    assert path_feasible(a1, ok).feasible
    no_delay = [DELAY, 0, DELAY, 1, DELAY, 2, 3]
    assert not path_feasible(a1, no_delay).feasible


def test_delay_interval(a2, pi_ref):
    a = instantiate(a2, pi_ref)
    iv = delay_interval(a, initial_config(a), a.transitions[0])
    assert iv == (0, False, 5, True)


def test_instantiate_removes_parameters(a2, pi_ref):
    a = instantiate(a2, pi_ref)
    assert a.params == ()
    assert run(a, [Delay(4), Fire(0), Delay(2), Fire(1)])[-1].v() == {"x1": 4, "x2": 3}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 1000))
def test_random_runs_are_feasible_paths(model_seed, run_seed):
    a = random_ita(model_seed)
    res = simulate_random(a, 8, run_seed)
    assert not res.violations  # upper-level clocks stay at zero
    path = AbstractPath.from_actions(res.actions)
    assert path.chains(a)
    assert path_feasible(a, path, cap=64).feasible
    delays = [x.d for x in res.actions if isinstance(x, Delay)]
    assert delays_witness(a, path, delays)


def test_simulation_is_deterministic():
    a = load_model(MODELS / "three_levels.pita")
    t1 = simulate_random(a, 12, 3).trace(a)
    assert t1 == simulate_random(a, 12, 3).trace(a)
    assert t1.splitlines()[0].startswith("idle")


def test_path_cap():
    a = load_model(MODELS / "a1.pita")
    with pytest.raises(SemanticsError, match="cap"):
        path_feasible(a, [DELAY] * 5, cap=4)
