"""
Concrete semantics of an instantiated automaton, with exact rationals.

Besides stepping and random simulation this module decides feasibility of
abstract paths (alternating delays and transitions) by eliminating the
delay variables exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Union

from . import fm
from .arith import var_key
from .model import (Automaton, ClockExpr, LinearAtom, Transition, compare,
                    _sorted_update)

DEFAULT_PATH_CAP = 64


class SemanticsError(RuntimeError):
    pass


def instantiate(a: Automaton, pi: Mapping[str, Fraction]) -> Automaton:
    """Replace every parameter by its value, giving a plain automaton."""
    if not a.params:
        return a
    missing = [p for p in a.params if p not in pi]
    if missing:
        raise SemanticsError(f"no value for parameters {missing}")
    pi = {p: Fraction(v) for p, v in pi.items()}
    ts = []
    for t in a.transitions:
        guard = []
        for g in t.guard:
            if isinstance(g, LinearAtom):
                guard.append(LinearAtom(g.expr.instantiate(pi), g.op))
            else:
                guard.append(g)
        upd = {z: e.instantiate(pi) for z, e in t.update}
        ts.append(replace(t, guard=tuple(guard), update=_sorted_update(upd)))
    return replace(a, params=(), transitions=tuple(ts))


@dataclass(frozen=True)
class Config:
    state: str
    valuation: tuple  # sorted ((clock, Fraction), ...)

    @staticmethod
    def of(state: str, values: Mapping[str, Fraction]) -> "Config":
        return Config(state, tuple(sorted(((z, Fraction(v)) for z, v in values.items()),
                                          key=lambda it: var_key(it[0]))))

    def v(self) -> dict:
        return dict(self.valuation)

    def __getitem__(self, clock: str) -> Fraction:
        return dict(self.valuation)[clock]


@dataclass(frozen=True)
class Delay:
    d: Fraction

    def __str__(self) -> str:
        return f"delay {_fmt(Fraction(self.d))}"


@dataclass(frozen=True)
class Fire:
    transition: int

    def __str__(self) -> str:
        return f"fire {self.transition}"


Action = Union[Delay, Fire]


def initial_config(a: Automaton) -> Config:
    return Config.of(a.initial.name, {c.name: 0 for c in a.clocks})


def _pi_of(a: Automaton, pi):
    if a.params and pi is None:
        raise SemanticsError("parametric automaton needs a parameter valuation")
    return {p: Fraction(v) for p, v in (pi or {}).items()}


def atom_holds(g, v: Mapping[str, Fraction], pi=None) -> bool:
    return compare(g.expr.evaluate(v, pi or {}), 0, g.op)


def guard_holds(t: Transition, v: Mapping[str, Fraction], pi=None) -> bool:
    return all(atom_holds(g, v, pi) for g in t.guard)


def apply_update_values(t: Transition, v: Mapping[str, Fraction], pi=None) -> dict:
    """Simultaneous update: every right-hand side reads the pre-state values."""
    out = dict(v)
    for z, e in t.update:
        out[z] = e.evaluate(v, pi or {})
    return out


def step(a: Automaton, c: Config, action: Action, pi=None) -> Config:
    pi = _pi_of(a, pi)
    if isinstance(action, Delay):
        d = Fraction(action.d)
        if d < 0:
            raise SemanticsError(f"negative delay {d}")
        v = c.v()
        act = a.state_map[c.state].act
        v[act] += d
        return Config.of(c.state, v)
    t = a.transitions[action.transition]
    if t.source != c.state:
        raise SemanticsError(f"transition {action.transition} does not leave {c.state}")
    v = c.v()
    if not guard_holds(t, v, pi):
        raise SemanticsError(f"guard of transition {action.transition} is false at {format_valuation(v)}")
    return Config.of(t.target, apply_update_values(t, v, pi))


def run(a: Automaton, actions, pi=None, start: Optional[Config] = None) -> list:
    """Every configuration along ``actions``, the start included."""
    c = start or initial_config(a)
    out = [c]
    for act in actions:
        c = step(a, c, act, pi)
        out.append(c)
    return out


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_valuation(v: Mapping[str, Fraction]) -> str:
    return ",".join(f"{z}={_fmt(Fraction(v[z]))}" for z in sorted(v, key=var_key))


def trace_line(c: Config, action: Optional[Action], a: Optional[Automaton] = None) -> str:
    if action is None:
        text = "end"
    elif isinstance(action, Fire) and a is not None:
        t = a.transitions[action.transition]
        text = f"fire {action.transition} {t.label or 'eps'} -> {t.target}"
    else:
        text = str(action)
    return f"{c.state} | {format_valuation(c.v())} | {text}"


def format_trace(a: Automaton, configs: list, actions: list) -> str:
    lines = [trace_line(c, act, a) for c, act in zip(configs, actions)]
    lines.append(trace_line(configs[-1], None))
    return "\n".join(lines) + "\n"


def check_upper_levels_zero(a: Automaton, c: Config) -> bool:
    lvl = a.state_map[c.state].level
    return all(x == 0 for z, x in c.valuation if a.level_of(z) > lvl)


def delay_interval(a: Automaton, c: Config, t: Transition, pi=None):
    """Delays d >= 0 after which ``t`` is enabled: (lo, lo_strict, hi, hi_strict) or None."""
    v = c.v()
    act = a.state_map[c.state].act
    lo, lo_s, hi, hi_s = Fraction(0), False, None, False
    for g in t.guard:
        e = g.expr
        base = e.evaluate(v, pi or {})
        slope = e.coeff(act).evaluate(pi or {}) if act in e.clocks() else Fraction(0)
        if slope == 0:
            if not compare(base, 0, g.op):
                return None
            continue
        bound = -base / slope
        op = g.op if slope > 0 else {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}[g.op]
        # d op bound
        if op in ("<", "<=", "="):
            s = op == "<"
            if hi is None or bound < hi or (bound == hi and s):
                hi, hi_s = bound, s
        if op in (">", ">=", "="):
            s = op == ">"
            if bound > lo or (bound == lo and s):
                lo, lo_s = bound, s
    if hi is not None and (hi < lo or (hi == lo and (lo_s or hi_s))):
        return None
    return lo, lo_s, hi, hi_s


def delay_menu(interval) -> list:
    lo, lo_s, hi, hi_s = interval
    menu = []
    if not lo_s:
        menu.append(lo)
    if hi is None:
        menu.append(lo + 1)
        menu.append(lo + Fraction(1, 2))
    else:
        if not hi_s:
            menu.append(hi)
        if hi > lo:
            menu.append((lo + hi) / 2)
            menu.append(lo + (hi - lo) / 4)
    return sorted(set(menu))


@dataclass
class SimulationResult:
    visited: set
    configs: list
    actions: list
    violations: list = field(default_factory=list)

    def trace(self, a: Automaton) -> str:
        return format_trace(a, self.configs, self.actions)


def simulate_random(a: Automaton, budget: int, seed: int, pi=None) -> SimulationResult:
    """Random run of at most ``budget`` discrete steps, deterministic in ``seed``."""
    if a.params:
        a = instantiate(a, _pi_of(a, pi))
    rng = random.Random(seed)
    c = initial_config(a)
    configs, actions = [c], []
    visited = {c.state}
    violations = []
    out_of = {}
    for i, t in enumerate(a.transitions):
        out_of.setdefault(t.source, []).append(i)
    for _ in range(budget):
        options = []
        for i in out_of.get(c.state, ()):
            iv = delay_interval(a, c, a.transitions[i])
            if iv is not None:
                options.append((i, iv))
        if not options:
            break
        i, iv = rng.choice(options)
        d = rng.choice(delay_menu(iv))
        if d:
            c = step(a, c, Delay(d))
            actions.append(Delay(d))
            configs.append(c)
        c = step(a, c, Fire(i))
        actions.append(Fire(i))
        configs.append(c)
        visited.add(c.state)
        if not check_upper_levels_zero(a, c):
            violations.append(c)
    return SimulationResult(visited, configs, actions, violations)


# abstract paths ------------------------------------------------------------

DELAY = "delay"


@dataclass(frozen=True)
class AbstractPath:
    """Sequence of ``DELAY`` markers and transition indices, starting at the initial state."""
    steps: tuple

    @staticmethod
    def of(steps) -> "AbstractPath":
        return AbstractPath(tuple(steps))

    @staticmethod
    def from_actions(actions) -> "AbstractPath":
        return AbstractPath(tuple(DELAY if isinstance(x, Delay) else x.transition for x in actions))

    def transitions(self) -> list:
        return [s for s in self.steps if s != DELAY]

    def chains(self, a: Automaton) -> bool:
        q = a.initial.name
        for s in self.steps:
            if s == DELAY:
                continue
            t = a.transitions[s]
            if t.source != q:
                return False
            q = t.target
        return True

    def __str__(self) -> str:
        return " ".join("d" if s == DELAY else f"t{s}" for s in self.steps)


@dataclass
class PathResult:
    feasible: bool
    delays: Optional[list] = None
    actions: Optional[list] = None

    def __bool__(self) -> bool:
        return self.feasible


def path_constraints(a: Automaton, path: AbstractPath, pi=None):
    """Linear constraints over the delay variables ``d0, d1, ...`` of ``path``."""
    pi = {p: Fraction(x) for p, x in (pi or {}).items()}
    vals = {c.name: ({}, Fraction(0)) for c in a.clocks}
    q = a.initial.name
    cons, dvars = [], []

    def lin(e: ClockExpr):
        co, k = {}, e.const.evaluate(pi)
        for z, c in e.coeffs:
            cz = c.evaluate(pi)
            vz, kz = vals[z]
            for d, b in vz.items():
                co[d] = co.get(d, 0) + cz * b
            k += cz * kz
        return {d: b for d, b in co.items() if b}, k

    for s in path.steps:
        if s == DELAY:
            d = f"d{len(dvars)}"
            dvars.append(d)
            cons.append(fm.make({d: 1}, 0, ">="))
            act = a.state_map[q].act
            co, k = vals[act]
            co = dict(co)
            co[d] = co.get(d, 0) + 1
            vals[act] = (co, k)
            continue
        t = a.transitions[s]
        if t.source != q:
            raise SemanticsError(f"path does not chain at transition {s}")
        for g in t.guard:
            co, k = lin(g.expr)
            cons.append(fm.make(co, k, g.op))
        new = {z: lin(e) for z, e in t.update}
        vals.update(new)
        q = t.target
    return cons, dvars


def path_feasible(a: Automaton, path, pi=None, cap: int = DEFAULT_PATH_CAP) -> PathResult:
    if not isinstance(path, AbstractPath):
        path = AbstractPath.of(path)
    if len(path.steps) > cap:
        raise SemanticsError(f"path length {len(path.steps)} exceeds the cap {cap}")
    if a.params and pi is None:
        raise SemanticsError("parametric automaton needs a parameter valuation")
    cons, dvars = path_constraints(a, path, pi)
    env = fm.solve(cons, dvars)
    if env is None:
        return PathResult(False)
    delays = [env.get(d, Fraction(0)) for d in dvars]
    actions, i = [], 0
    for s in path.steps:
        if s == DELAY:
            actions.append(Delay(delays[i]))
            i += 1
        else:
            actions.append(Fire(s))
    return PathResult(True, delays, actions)


def delays_witness(a: Automaton, path, delays, pi=None) -> bool:
    """Whether the given delays realize ``path`` (the executed run is replayed)."""
    if not isinstance(path, AbstractPath):
        path = AbstractPath.of(path)
    cons, dvars = path_constraints(a, path, pi)
    return fm.satisfies(cons, {d: Fraction(x) for d, x in zip(dvars, delays)})
