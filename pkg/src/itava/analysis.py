"""
Reachability questions over parameter valuations, and two reductions that
produce plain automata: additive parameters as frozen clocks, and
propositional planning as an automaton with one auxiliary clock per
proposition.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .arith import Poly, RatFun, var_key
from .classgraph import DEFAULT_CLASS_CAP, build
from .exprsets import saturate
from .model import (Automaton, Clock, ClockExpr, LinearAtom, State, Transition, desugar_policies,
                    _sorted_update, validate)
from .regions import (EnumerationLog, Formula, ParamRegion, enumerate_regions,
                      region_constraints)
from .semantics import DELAY, AbstractPath, path_feasible
from .smt import Oracle

YES, NO, UNKNOWN = "Yes", "No", "Unknown"
EXIT_CODES = {YES: 0, NO: 1, UNKNOWN: 2}


class AnalysisError(RuntimeError):
    pass


@dataclass
class Verdict:
    answer: str
    witness_region: Optional[list] = None
    witness_valuation: Optional[dict] = None
    witness_path: Optional[list] = None
    witness_delays: Optional[list] = None
    region: Optional[ParamRegion] = None
    stats: dict = field(default_factory=dict)
    abstract_path: Optional[AbstractPath] = None
    seconds: float = 0.0  # wall time, kept out of the JSON document

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.answer]

    def to_json(self) -> dict:
        def frac(x):
            x = Fraction(x)
            return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        return {
            "answer": self.answer,
            "witness_region": self.witness_region,
            "witness_valuation": None if self.witness_valuation is None else
            {p: frac(v) for p, v in sorted(self.witness_valuation.items(), key=lambda it: var_key(it[0]))},
            "witness_path": self.witness_path,
            "witness_delays": None if self.witness_delays is None else [frac(d) for d in self.witness_delays],
            "stats": self.stats,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def prepare(a: Automaton) -> Automaton:
    a = desugar_policies(a)
    problems = validate(a)
    if problems:
        raise AnalysisError("invalid automaton: " + "; ".join(str(v) for v in problems))
    return a


def merge_delays(path: AbstractPath) -> AbstractPath:
    """Consecutive delays in one state add up, so one marker suffices."""
    out = []
    for s in path.steps:
        if s == DELAY and out and out[-1] == DELAY:
            continue
        out.append(s)
    return AbstractPath(tuple(out))


def trim(a: Automaton, targets) -> Automaton:
    """Drop the states that are not on some path from the initial state to a target."""
    fwd, bwd = {a.initial.name}, set(targets)
    changed = True
    while changed:
        changed = False
        for t in a.transitions:
            if t.source in fwd and t.target not in fwd:
                fwd.add(t.target)
                changed = True
            if t.target in bwd and t.source not in bwd:
                bwd.add(t.source)
                changed = True
    keep = (fwd & bwd) | {a.initial.name}
    states = tuple(s for s in a.states if s.name in keep)
    ts = tuple(t for t in a.transitions if t.source in keep and t.target in keep)
    return replace(a, states=states, transitions=ts)


def _path_names(a: Automaton, path) -> list:
    out = []
    for s in path.steps:
        if s == DELAY:
            out.append("delay")
        else:
            t = a.transitions[s]
            out.append(f"t{s} {t.label or 'eps'} {t.source}->{t.target}")
    return out


class _Session:
    def __init__(self, a: Automaton, targets, scope, solver, cap, class_cap, seed):
        self.original = prepare(a)
        self.a = trim(self.original, targets)
        kept = set(self.a.transitions)
        self.tmap = [i for i, t in enumerate(self.original.transitions) if t in kept]
        self.scope = scope
        self.t0 = time.perf_counter()
        self.es = saturate(self.a, cap=cap)
        self.oracle = Oracle(self.a.params, solver, seed)
        self.class_cap = class_cap
        self.log = EnumerationLog()
        self.classes = 0
        self.regions = 0

    def regions_stream(self, open_only: bool):
        return enumerate_regions(self.es, self.oracle, self.scope, open_only, self.log)

    def explore(self, region: ParamRegion, targets):
        ca = build(self.a, region, self.es, self.class_cap, targets)
        self.regions += 1
        self.classes += len(ca.classes)
        return ca, ca.find(targets)

    def verdict(self, answer, region=None, ca=None, hit=None) -> Verdict:
        v = Verdict(answer)
        if region is not None:
            v.region = region
            v.witness_region = region_constraints(region, self.es).lines()
            v.witness_valuation = region.witness
        if ca is not None and hit is not None:
            path = merge_delays(ca.path_to(hit))
            path = AbstractPath(tuple(x if x == DELAY else self.tmap[x] for x in path.steps))
            v.witness_path = _path_names(self.original, path)
            v.abstract_path = path
            if region.witness is not None:
                res = path_feasible(self.original, path, region.witness, cap=max(64, len(path.steps)))
                if not res.feasible:
                    raise AnalysisError("witness path is not concretely feasible (class graph bug)")
                v.witness_delays = res.delays
        v.stats = self.stats()
        v.seconds = time.perf_counter() - self.t0
        return v

    def stats(self) -> dict:
        st = {"regions": self.regions, "classes": self.classes,
              "exprsets": {f"E{k}": n for k, n in self.es.sizes().items()},
              "polpar": len(self.es.polpar),
              "inconclusive_regions": self.log.inconclusive,
              "solver": self.oracle.stats()}
        return st

    def close(self):
        self.oracle.close()


def _targets(a: Automaton, targets):
    if targets is None:
        targets = [s.name for s in a.states if s.final]
    targets = list(targets)
    unknown = [q for q in targets if q not in a.state_map]
    if unknown:
        raise AnalysisError(f"unknown target states {unknown}")
    return targets


def existential_reach(a: Automaton, targets=None, scope: Optional[Formula] = None, solver: Optional[str] = None,
                      cap: Optional[int] = None, class_cap: int = DEFAULT_CLASS_CAP, seed: int = 0,
                      open_only: bool = False) -> Verdict:
    targets = _targets(a, targets)
    s = _Session(a, targets, scope, solver, cap, class_cap, seed)
    try:
        for region in s.regions_stream(open_only):
            ca, hit = s.explore(region, targets)
            if hit is not None:
                return s.verdict(YES, region, ca, hit)
        return s.verdict(UNKNOWN if s.log.inconclusive else NO)
    finally:
        s.close()


def robust_reach(a: Automaton, targets=None, scope=None, solver=None, cap=None,
                 class_cap: int = DEFAULT_CLASS_CAP, seed: int = 0) -> Verdict:
    return existential_reach(a, targets, scope, solver, cap, class_cap, seed, open_only=True)


def universal_reach(a: Automaton, targets=None, scope=None, solver=None, cap=None,
                    class_cap: int = DEFAULT_CLASS_CAP, seed: int = 0) -> Verdict:
    targets = _targets(a, targets)
    s = _Session(a, targets, scope, solver, cap, class_cap, seed)
    try:
        for region in s.regions_stream(False):
            ca, hit = s.explore(region, targets)
            if hit is None:
                return s.verdict(NO, region)
        return s.verdict(UNKNOWN if s.log.inconclusive else YES)
    finally:
        s.close()


def reach(a: Automaton, mode: str, targets=None, **kw) -> Verdict:
    fn = {"exist": existential_reach, "forall": universal_reach, "robust": robust_reach}.get(mode)
    if fn is None:
        raise AnalysisError(f"unknown mode {mode!r}")
    return fn(a, targets, **kw)


# additive parameters -------------------------------------------------------

def _additive_check(e: ClockExpr, params: set, where: str):
    for n, c in e.coeffs:
        if not c.is_constant():
            raise AnalysisError(f"not additive: coefficient {c} of {n} in {where}")
    if e.const.den or e.const.num.degree() > 1:
        raise AnalysisError(f"not additive: constant term {e.const} in {where}")


def _lift_params(e: ClockExpr, params) -> ClockExpr:
    """Move the parameter terms of the constant into clock terms of the same names."""
    coeffs = {n: c for n, c in e.coeffs}
    const = Fraction(0)
    for m, c in e.const.num.terms.items():
        if m == ():
            const += c
        else:
            ((p, _),) = m
            coeffs[p] = coeffs.get(p, RatFun(0)) + RatFun(Poly.const(c))
    return ClockExpr(coeffs, const)


def _fresh(base: str, taken: set) -> str:
    name, i = base, 0
    while name in taken:
        i += 1
        name = f"{base}_{i}"
    taken.add(name)
    return name


def reduce_additive(a: Automaton, scope: Optional[Formula] = None) -> Automaton:
    """Plain automaton whose reachable original states are those reachable for some valuation."""
    params = sorted(a.params, key=var_key)
    pset = set(params)
    for i, t in enumerate(a.transitions):
        for g in t.guard:
            if isinstance(g, LinearAtom):
                _additive_check(g.expr, pset, f"guard of transition {i}")
        for z, e in t.update:
            _additive_check(e, pset, f"update of {z} on transition {i}")
    k = len(params)
    shift = k + 1
    taken = {c.name for c in a.clocks} | {s.name for s in a.states} | pset
    p0 = _fresh("p0", taken) if "p0" not in pset else _fresh("p0_", taken)
    pclocks = [p0] + params  # main clocks of levels 1..k+1
    clocks = [Clock(n, i + 1, True) for i, n in enumerate(pclocks)]
    clocks += [replace(c, level=c.level + shift) for c in a.clocks]
    states = [State(_fresh(f"pre{i}", taken), i, pclocks[i - 1], initial=(i == 1)) for i in range(1, k + 2)]
    chain = [states[-1]] + [State(_fresh(f"sign{i}", taken), k + 1, pclocks[k]) for i in range(k - 1, -1, -1)]
    states += chain[1:]
    states += [replace(s, level=s.level + shift, initial=False) for s in a.states]
    ts = []
    for i in range(k):
        ts.append(Transition(states[i].name, states[i + 1].name))
    for j in range(k):
        # p_i := +-p_{i-1}, from i = k down to 1
        i = k - j
        src, dst = chain[j].name, chain[j + 1].name
        for sgn in (1, -1):
            ts.append(Transition(src, dst, (), None, ((pclocks[i], ClockExpr({pclocks[i - 1]: sgn})),)))
    entry_guards = [()]
    if scope is not None:
        entry_guards = []
        for conj in scope.disjuncts():
            g = []
            for atom in conj:
                if atom.poly.degree() > 1:
                    raise AnalysisError(f"scope atom {atom} is not polyhedral")
                g.append(LinearAtom(_lift_params(ClockExpr({}, atom.poly), params), atom.op))
            entry_guards.append(tuple(g))
    for g in entry_guards:
        ts.append(Transition(chain[-1].name, a.initial.name, g))
    for t in a.transitions:
        guard = tuple(LinearAtom(_lift_params(g.expr, params), g.op) if isinstance(g, LinearAtom) else g
                      for g in t.guard)
        upd = {z: _lift_params(e, params) for z, e in t.update}
        ts.append(replace(t, guard=guard, update=_sorted_update(upd)))
    out = Automaton((), a.levels + shift, tuple(clocks), tuple(states), tuple(ts), f"{a.name}_additive")
    problems = validate(out)
    if problems:
        raise AnalysisError("reduction is not a valid automaton: " + "; ".join(str(v) for v in problems))
    return out


def is_additive(a: Automaton) -> bool:
    try:
        pset = set(a.params)
        for t in a.transitions:
            for g in t.guard:
                if isinstance(g, LinearAtom):
                    _additive_check(g.expr, pset, "")
            for _, e in t.update:
                _additive_check(e, pset, "")
        return True
    except AnalysisError:
        return False


def additive_reach(a: Automaton, targets=None, scope=None, **kw) -> Verdict:
    """Existential reachability through :func:`reduce_additive` and the plain class graph."""
    targets = _targets(a, targets)
    b = reduce_additive(prepare(a), scope)
    v = existential_reach(b, targets, **kw)
    v.stats["reduced_levels"] = b.levels
    return v


# planning ------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    guard: tuple  # ((proposition index, bool), ...)
    effect: tuple  # ((proposition index, bool), ...)


def compile_planning(n: int, rules) -> tuple:
    """Single-level automaton with q1 reachable iff all propositions can be made true."""
    if n < 1:
        raise AnalysisError("at least one proposition is required")
    ys = [f"y{i}" for i in range(1, n + 1)]
    clocks = (Clock("x1", 1, True),) + tuple(Clock(y, 1, False) for y in ys)
    states = (State("q0", 1, "x1", initial=True), State("q1", 1, "x1", final=True))
    ts = []
    for r in rules:
        guard = tuple(LinearAtom(ClockExpr({ys[j]: 1}, -1 if val else 0), "=") for j, val in r.guard)
        upd = {ys[j]: ClockExpr.constant(1 if val else 0) for j, val in r.effect}
        ts.append(Transition("q0", "q0", guard, None, _sorted_update(upd)))
    goal = tuple(LinearAtom(ClockExpr({y: 1}, -1), "=") for y in ys)
    ts.append(Transition("q0", "q1", goal))
    return Automaton((), 1, clocks, states, tuple(ts), "planning"), "q1"


def plan_exists(n: int, rules) -> bool:
    """Breadth-first search over the 2^n truth assignments."""
    start = (False,) * n
    seen, frontier = {start}, [start]
    while frontier:
        nxt = []
        for s in frontier:
            if all(s):
                return True
            for r in rules:
                if all(s[j] == val for j, val in r.guard):
                    t = list(s)
                    for j, val in r.effect:
                        t[j] = val
                    t = tuple(t)
                    if t not in seen:
                        seen.add(t)
                        nxt.append(t)
        frontier = nxt
    return False
