"""
Sampled checks relating a class automaton to the concrete semantics at one
valuation: discrete-step soundness and completeness, time successors, class
membership, and agreement of abstract and concrete paths.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .classgraph import TIME, ClassAutomaton, class_of, sample_configs
from .semantics import (DELAY, AbstractPath, Config, apply_update_values, guard_holds,
                        path_feasible)


@dataclass
class CheckReport:
    classes: int = 0
    samples: int = 0
    discrete: int = 0
    delays: int = 0
    paths: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "CheckReport") -> None:
        self.classes += other.classes
        self.samples += other.samples
        self.discrete += other.discrete
        self.delays += other.delays
        self.paths += other.paths
        self.violations.extend(other.violations)


def _delayed(a, c: Config, d: Fraction) -> Config:
    v = c.v()
    v[a.state_map[c.state].act] += d
    return Config.of(c.state, v)


def first_breakpoint(ca: ClassAutomaton, c: Config, pi) -> Optional[Fraction]:
    """Smallest positive delay at which two level expressions change their order."""
    a, es = ca.automaton, ca.exprsets
    st = a.state_map[c.state]
    v = c.v()
    k = st.level
    lines = []
    for e in es.exprs[k]:
        try:
            base = e.evaluate(v, pi)
            slope = e.coeff(st.act).evaluate(pi) if st.act in e.clocks() else Fraction(0)
        except ZeroDivisionError:
            continue
        lines.append((base, slope))
    best = None
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            (b1, s1), (b2, s2) = lines[i], lines[j]
            if s1 == s2:
                continue
            d = (b2 - b1) / (s1 - s2)
            if d > 0 and (best is None or d < best):
                best = d
    return best


def check_classes(ca: ClassAutomaton, pi=None, rng: Optional[random.Random] = None,
                  samples: int = 10) -> CheckReport:
    """Membership, DS soundness and completeness, and TS on sampled configurations."""
    a, es, region = ca.automaton, ca.exprsets, ca.region
    pi = {p: Fraction(x) for p, x in (pi if pi is not None else (region.witness or {})).items()}
    rng = rng or random.Random(0)
    rep = CheckReport()
    out_edges = {}
    time_succ = {}
    for s, lab, d in ca.edges:
        if lab == TIME:
            time_succ[s] = d
        else:
            out_edges.setdefault(s, {}).setdefault(lab, set()).add(d)
    by_source = {}
    for ti, t in enumerate(a.transitions):
        by_source.setdefault(t.source, []).append(ti)
    for i, cls in enumerate(ca.classes):
        if i not in time_succ:
            continue  # not expanded (early stop)
        rep.classes += 1
        configs = sample_configs(cls, a, es, pi, rng, samples)
        if not configs:
            rep.violations.append(f"class c{i} has no concrete configuration")
            continue
        for c in configs:
            rep.samples += 1
            if ca.index.get(class_of(c, a, region, es, pi)) != i:
                rep.violations.append(f"sample {c} of c{i} is classified elsewhere")
                continue
            v = c.v()
            for ti in by_source.get(cls.state, ()):
                t = a.transitions[ti]
                fires = guard_holds(t, v, pi)
                targets = out_edges.get(i, {}).get(ti)
                if fires != (targets is not None):
                    kind = "completeness" if fires else "soundness"
                    rep.violations.append(f"DS {kind}: t{ti} from c{i} at {c}")
                    continue
                if fires:
                    rep.discrete += 1
                    nxt = Config.of(t.target, apply_update_values(t, v, pi))
                    j = ca.index.get(class_of(nxt, a, region, es, pi))
                    if j not in targets:
                        rep.violations.append(f"DS soundness: t{ti} from c{i} lands outside c{sorted(targets)}")
            rep.violations.extend(_check_time(ca, i, c, time_succ[i], pi))
            rep.delays += 1
    return rep


def _check_time(ca: ClassAutomaton, i: int, c: Config, post: int, pi) -> list:
    a, es, region = ca.automaton, ca.exprsets, ca.region

    def where(d):
        return ca.index.get(class_of(_delayed(a, c, d), a, region, es, pi))

    d1 = first_breakpoint(ca, c, pi)
    horizon = d1 if d1 is not None else Fraction(1)
    allowed = {i, post}
    for d in (horizon / 4, horizon / 2, horizon * 3 / 4):
        if where(d) not in allowed:
            return [f"TS: delay {d} from c{i} leaves R and Post(R)"]
    if d1 is None:
        # no crossing ahead: the class right after now is final
        if where(horizon / 2) != post or where(horizon * 7) != post:
            return [f"TS: c{i} should settle in Post c{post}"]
        return []
    if post not in (where(d1 / 2), where(d1)):
        return [f"TS: no delay up to {d1} from c{i} reaches Post c{post}"]
    return []


def path_agreement(ca: ClassAutomaton, max_len: int = 10, pi=None) -> CheckReport:
    """Every step sequence of length at most ``max_len`` is abstractly present iff concretely feasible."""
    a = ca.automaton
    pi = pi if pi is not None else (ca.region.witness or {})
    rep = CheckReport()
    trans_edges, time_edges = {}, {}
    for s, lab, d in ca.edges:
        if lab == TIME:
            time_edges.setdefault(s, set()).add(d)
        else:
            trans_edges.setdefault((s, lab), set()).add(d)
    by_source = {}
    for ti, t in enumerate(a.transitions):
        by_source.setdefault(t.source, []).append(ti)

    def closure(S):
        stack, seen = list(S), set(S)
        while stack:
            x = stack.pop()
            for y in time_edges.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return frozenset(seen)

    def visit(steps, S, state):
        if steps:
            rep.paths += 1
            concrete = path_feasible(a, AbstractPath(tuple(steps)), pi, cap=max_len).feasible
            if concrete != bool(S):
                rep.violations.append(f"path {AbstractPath(tuple(steps))}: abstract {bool(S)}, concrete {concrete}")
                return
            if not concrete:
                return
        if len(steps) == max_len:
            return
        if not steps or steps[-1] != DELAY:
            visit(steps + [DELAY], closure(S), state)
        for ti in by_source.get(state, ()):
            nxt = frozenset(d for x in S for d in trans_edges.get((x, ti), ()))
            visit(steps + [ti], nxt, a.transitions[ti].target)

    visit([], frozenset([ca.initial]), a.initial.name)
    return rep
