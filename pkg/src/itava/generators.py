"""Random model generators used by the differential and property tests."""

from __future__ import annotations

import random
from fractions import Fraction

from .analysis import Rule
from .arith import Poly
from .model import (Automaton, Clock, ClockExpr, DiffAtom, LinearAtom, State, Transition,
                    _sorted_update, reset_implicit, validate)

GUARD_OPS = ("<", "<=", "=", ">=", ">")


def _clocks(rng: random.Random, levels: int, max_aux: int) -> list:
    out = []
    for k in range(1, levels + 1):
        out.append(Clock(f"x{k}", k, True))
        for j in range(rng.randint(0, max_aux)):
            out.append(Clock(f"y{k}{'abc'[j]}", k, False))
    return out


def _states(rng: random.Random, levels: int, n: int, clocks: list, aux_act: bool) -> list:
    lv = [1] + [rng.randint(1, levels) for _ in range(n - 1)]
    out = []
    for i, k in enumerate(lv):
        act = f"x{k}"
        if aux_act:
            act = rng.choice([c.name for c in clocks if c.level == k])
        out.append(State(f"q{i}", k, act, initial=(i == 0), final=(i == n - 1 and n > 1)))
    return out


def _lower_expr(rng: random.Random, k: int, const) -> ClockExpr:
    coeffs = {}
    for j in range(1, k):
        if rng.random() < 0.4:
            coeffs[f"x{j}"] = rng.choice((-1, 1))
    return ClockExpr(coeffs, const)


def _pairs(rng: random.Random, states: list, count: int) -> list:
    """A chain from the initial to the last state, then random extra pairs."""
    out = list(zip(states, states[1:]))
    while len(out) < count:
        out.append((rng.choice(states), rng.choice(states)))
    return out


def _update(rng, clocks, k, k2, const_of) -> dict:
    upd = {}
    top = min(k, k2)
    for c in clocks:
        if c.level > top or rng.random() > 0.25:
            continue
        same = [d.name for d in clocks if d.level == c.level and d.name != c.name]
        r = rng.random()
        if same and r < 0.3 and (not c.main or k == k2 == c.level):
            upd[c.name] = ClockExpr.clock(rng.choice(same))
        else:
            upd[c.name] = _lower_expr(rng, c.level, const_of())
    return upd


def random_ita(seed: int, levels: int = 2, max_aux: int = 2, max_states: int = 5,
               max_transitions: int = 7, max_const: int = 3, aux_act: bool = True) -> Automaton:
    """Valid params-free automaton; each call with the same seed gives the same model."""
    rng = random.Random(seed)
    while True:
        nl = rng.randint(1, levels)
        clocks = _clocks(rng, nl, max_aux)
        states = _states(rng, nl, rng.randint(2, max_states), clocks, aux_act)
        ts = []
        for s, d in _pairs(rng, states, rng.randint(1, max_transitions)):
            k = s.level
            own = [c.name for c in clocks if c.level == k]
            guard = []
            for _ in range(rng.randint(0, 2)):
                if len(own) > 1 and rng.random() < 0.2:
                    l, r = rng.sample(own, 2)
                    guard.append(DiffAtom(l, r, rng.choice(GUARD_OPS)))
                    continue
                e = _lower_expr(rng, k, -rng.randint(0, max_const))
                if rng.random() < 0.9:
                    e = e + ClockExpr.clock(rng.choice(own))
                guard.append(LinearAtom(e, rng.choice(GUARD_OPS)))
            upd = _update(rng, clocks, k, d.level, lambda: rng.randint(0, max_const))
            ts.append(Transition(s.name, d.name, tuple(guard), rng.choice("ab"), _sorted_update(upd)))
        a = reset_implicit(Automaton((), nl, tuple(clocks), tuple(states), tuple(ts), f"R{seed}"))
        if not validate(a):
            return a


def random_additive(seed: int, levels: int = 2, params: int = 2, max_states: int = 4,
                    max_transitions: int = 5, max_const: int = 2) -> Automaton:
    """Valid PITA in which parameters occur only as additive constants."""
    rng = random.Random(seed)
    names = [f"p{i}" for i in range(1, rng.randint(1, params) + 1)]

    def const():
        c = Poly.const(rng.randint(0, max_const))
        if rng.random() < 0.5:
            c = c + Poly.var(rng.choice(names)) * rng.choice((-1, 1))
        return c

    while True:
        nl = rng.randint(1, levels)
        clocks = _clocks(rng, nl, 1)
        states = _states(rng, nl, rng.randint(2, max_states), clocks, False)
        ts = []
        for s, d in _pairs(rng, states, rng.randint(1, max_transitions)):
            k = s.level
            own = [c.name for c in clocks if c.level == k]
            guard = []
            for _ in range(rng.randint(0, 2)):
                e = _lower_expr(rng, k, -const()) + ClockExpr.clock(rng.choice(own))
                guard.append(LinearAtom(e, rng.choice(GUARD_OPS)))
            upd = _update(rng, clocks, k, d.level, const)
            ts.append(Transition(s.name, d.name, tuple(guard), rng.choice("ab"), _sorted_update(upd)))
        a = reset_implicit(Automaton(tuple(names), nl, tuple(clocks), tuple(states), tuple(ts), f"P{seed}"))
        if not validate(a):
            return a


def random_planning(seed: int, max_props: int = 6, max_rules: int = 8) -> tuple:
    """(n, rules) with literal guards and assignments over n propositions."""
    rng = random.Random(seed)
    n = rng.randint(1, max_props)
    rules = []
    for _ in range(rng.randint(0, max_rules)):
        g = rng.sample(range(n), rng.randint(0, min(2, n)))
        e = rng.sample(range(n), rng.randint(1, min(3, n)))
        rules.append(Rule(tuple((j, rng.random() < 0.5) for j in sorted(g)),
                          tuple((j, rng.random() < 0.7) for j in sorted(e))))
    return n, rules


def random_valuation(rng: random.Random, params, span: int = 4) -> dict:
    return {p: Fraction(rng.randint(-span * 4, span * 4), 4) for p in params}
