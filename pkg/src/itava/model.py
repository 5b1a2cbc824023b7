"""
Interrupt timed automata with auxiliary clocks and polynomial parameters.

An automaton with an empty parameter list is a plain ITA.  Everything here is
immutable; structural restrictions are reported by :func:`validate` as data.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Union

from .arith import Poly, RatFun, var_key

OPS = ("<", "<=", "=", ">=", ">")
FLIP = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}
POLICIES = ("lazy", "urgent", "delayed")


def compare(a, b, op: str) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "=":
        return a == b
    if op == ">=":
        return a >= b
    if op == ">":
        return a > b
    raise ValueError(f"unknown operator {op!r}")


@dataclass(frozen=True)
class Clock:
    name: str
    level: int
    main: bool

    @property
    def kind(self) -> str:
        return "main" if self.main else "auxiliary"


class ClockExpr:
    """Linear expression ``sum(coeff * clock) + const`` with rational-function coefficients."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Optional[Mapping[str, object]] = None, const=0):
        items = []
        for name, c in (coeffs or {}).items():
            c = RatFun.lift(c)
            if not c.is_zero():
                items.append((name, c))
        items.sort(key=lambda it: var_key(it[0]))
        self.coeffs = tuple(items)
        self.const = RatFun.lift(const)

    @classmethod
    def clock(cls, name: str) -> "ClockExpr":
        return cls({name: 1})

    @classmethod
    def constant(cls, c) -> "ClockExpr":
        return cls({}, c)

    def coeff(self, name: str) -> RatFun:
        for n, c in self.coeffs:
            if n == name:
                return c
        return RatFun(0)

    def clocks(self) -> tuple:
        return tuple(n for n, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def single_clock(self) -> Optional[str]:
        """Name of the clock when the expression is exactly that clock."""
        if len(self.coeffs) == 1 and self.const.is_zero():
            n, c = self.coeffs[0]
            if c.is_constant() and c.constant_value() == 1:
                return n
        return None

    def parameters(self) -> set:
        out = set()
        for c in self.ratfuns():
            out |= c.num.variables()
            for f in c.den:
                out |= f.variables()
        return out

    def ratfuns(self):
        yield from (c for _, c in self.coeffs)
        yield self.const

    def __add__(self, other: "ClockExpr") -> "ClockExpr":
        d = {n: c for n, c in self.coeffs}
        for n, c in other.coeffs:
            d[n] = d[n] + c if n in d else c
        return ClockExpr(d, self.const + other.const)

    def __neg__(self) -> "ClockExpr":
        return ClockExpr({n: -c for n, c in self.coeffs}, -self.const)

    def __sub__(self, other: "ClockExpr") -> "ClockExpr":
        return self + (-other)

    def scale(self, k) -> "ClockExpr":
        k = RatFun.lift(k)
        return ClockExpr({n: c * k for n, c in self.coeffs}, self.const * k)

    def divide(self, k) -> "ClockExpr":
        return ClockExpr({n: c / k for n, c in self.coeffs}, self.const / k)

    def drop(self, names) -> "ClockExpr":
        return ClockExpr({n: c for n, c in self.coeffs if n not in names}, self.const)

    def substitute(self, mapping: Mapping[str, "ClockExpr"]) -> "ClockExpr":
        """Simultaneous substitution of clocks by expressions."""
        out = ClockExpr.constant(self.const)
        for n, c in self.coeffs:
            rhs = mapping.get(n)
            if rhs is None:
                out = out + ClockExpr({n: c})
            else:
                out = out + rhs.scale(c)
        return out

    def instantiate(self, pi: Mapping[str, Fraction]) -> "ClockExpr":
        return ClockExpr({n: c.evaluate(pi) for n, c in self.coeffs}, self.const.evaluate(pi))

    def evaluate(self, valuation: Mapping[str, Fraction], pi: Optional[Mapping[str, Fraction]] = None) -> Fraction:
        pi = pi or {}
        total = self.const.evaluate(pi)
        for n, c in self.coeffs:
            total += c.evaluate(pi) * Fraction(valuation.get(n, 0))
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClockExpr):
            return NotImplemented
        if tuple(n for n, _ in self.coeffs) != tuple(n for n, _ in other.coeffs):
            return False
        return all(a == b for (_, a), (_, b) in zip(self.coeffs, other.coeffs)) and self.const == other.const

    def __hash__(self) -> int:
        return hash(self.clocks())

    def common_denominator(self) -> tuple:
        den = []
        for c in self.ratfuns():
            pool = list(den)
            for f in c.den:
                if f in pool:
                    pool.remove(f)
                else:
                    den.append(f)
        return tuple(sorted(den, key=Poly.sort_key))

    def __str__(self) -> str:
        den = self.common_denominator()
        dpoly = Poly.const(1)
        for f in den:
            dpoly = dpoly * f
        parts = []
        for n, c in self.coeffs:
            num = c.num
            rest = list(den)
            for f in c.den:
                rest.remove(f)
            for f in rest:
                num = num * f
            parts.append((num, n))
        cnum = self.const.num
        rest = list(den)
        for f in self.const.den:
            rest.remove(f)
        for f in rest:
            cnum = cnum * f
        text = _linear_text(parts, cnum)
        if not den:
            return text
        d = "*".join(f"({f})" if len(f.terms) > 1 else str(f) for f in den)
        if len(den) > 1:
            d = f"({d})"
        if len(parts) + (0 if cnum.is_zero() else 1) > 1 or " " in text:
            text = f"({text})"
        return f"{text}/{d}"

    def __repr__(self) -> str:
        return f"ClockExpr({str(self)!r})"


def _linear_text(parts, cnum: Poly) -> str:
    out = []
    for num, name in parts:
        if num.is_constant():
            v = num.constant_value()
            neg = v < 0
            a = -v if neg else v
            body = name if a == 1 else f"{_frac(a)}*{name}"
        elif len(num.terms) == 1:
            (m, c), = num.terms.items()
            neg = c < 0
            body = f"{str(-num if neg else num)}*{name}"
        else:
            neg = False
            body = f"({num})*{name}"
        out.append((neg, body))
    if not cnum.is_zero():
        if cnum.is_constant():
            v = cnum.constant_value()
            out.append((v < 0, _frac(abs(v))))
        else:
            s = str(cnum)
            if s.startswith("-") and len(cnum.terms) == 1:
                out.append((True, s[1:]))
            elif out:
                first_neg = s.startswith("-")
                out.append((first_neg, s[1:] if first_neg else s))
            else:
                out.append((False, s))
    if not out:
        return "0"
    text = ("-" if out[0][0] else "") + out[0][1]
    for neg, body in out[1:]:
        text += (" - " if neg else " + ") + body
    return text


def _frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class LinearAtom:
    expr: ClockExpr
    op: str

    def __str__(self) -> str:
        return f"{self.expr} {self.op} 0"


@dataclass(frozen=True)
class DiffAtom:
    """``left - right op 0`` for two clocks of the same level."""
    left: str
    right: str
    op: str

    @property
    def expr(self) -> ClockExpr:
        return ClockExpr({self.left: 1, self.right: -1})

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


GuardAtom = Union[LinearAtom, DiffAtom]


@dataclass(frozen=True)
class State:
    name: str
    level: int
    act: str
    initial: bool = False
    final: bool = False
    policy: str = "lazy"


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: tuple = ()
    label: Optional[str] = None
    update: tuple = ()  # ((clock, ClockExpr), ...) ; identity assignments are omitted

    def update_map(self) -> dict:
        return dict(self.update)


@dataclass(frozen=True)
class Automaton:
    params: tuple
    levels: int
    clocks: tuple
    states: tuple
    transitions: tuple
    name: str = "A"

    @cached_property
    def clock_map(self) -> dict:
        return {c.name: c for c in self.clocks}

    @cached_property
    def state_map(self) -> dict:
        return {s.name: s for s in self.states}

    @cached_property
    def alphabet(self) -> tuple:
        return tuple(sorted({t.label for t in self.transitions if t.label is not None}))

    @property
    def initial(self) -> State:
        return next(s for s in self.states if s.initial)

    def level_of(self, name: str) -> int:
        return self.clock_map[name].level

    def main_clock(self, level: int) -> str:
        return next(c.name for c in self.clocks if c.level == level and c.main)

    def clocks_at(self, level: int) -> list:
        """Clocks of a level, main clock first."""
        cs = [c for c in self.clocks if c.level == level]
        cs.sort(key=lambda c: (not c.main,))
        return [c.name for c in cs]

    def expr_level(self, e: ClockExpr) -> int:
        return max((self.level_of(n) for n in e.clocks()), default=0)

    def is_parametric(self) -> bool:
        return bool(self.params)

    def with_transitions(self, transitions) -> "Automaton":
        return replace(self, transitions=tuple(transitions))


@dataclass(frozen=True)
class Violation:
    where: str
    rule: str

    def __str__(self) -> str:
        return f"{self.where}: {self.rule}"


def classify_update(a: Automaton, clock: str, rhs: ClockExpr) -> str:
    """One of 'unchanged', 'copy', 'lower' or 'invalid' for the assignment ``clock := rhs``."""
    if rhs.single_clock() == clock:
        return "unchanged"
    z = a.clock_map[clock]
    src = rhs.single_clock()
    if src is not None and src in a.clock_map and a.level_of(src) == z.level:
        return "copy"
    for n in rhs.clocks():
        c = a.clock_map.get(n)
        if c is None or not c.main or c.level >= z.level:
            return "invalid"
    return "lower"


def validate(a: Automaton) -> list:
    """Every structural restriction on the automaton, as a list of violations."""
    out = []
    if a.levels < 1:
        out.append(Violation("automaton", "at least one level is required"))
    names = [c.name for c in a.clocks]
    for n in set(names):
        if names.count(n) > 1:
            out.append(Violation(f"clock {n}", "duplicate clock id"))
    for n in set(names) & set(a.params):
        out.append(Violation(f"clock {n}", "name clashes with a parameter"))
    for lvl in range(1, a.levels + 1):
        mains = [c for c in a.clocks if c.level == lvl and c.main]
        if len(mains) != 1:
            out.append(Violation(f"level {lvl}", f"exactly one main clock required, found {len(mains)}"))
    for c in a.clocks:
        if not 1 <= c.level <= a.levels:
            out.append(Violation(f"clock {c.name}", f"level {c.level} outside [1, {a.levels}]"))
    snames = [s.name for s in a.states]
    for n in set(snames):
        if snames.count(n) > 1:
            out.append(Violation(f"state {n}", "duplicate state id"))
    inits = [s for s in a.states if s.initial]
    if len(inits) != 1:
        out.append(Violation("automaton", f"exactly one initial state required, found {len(inits)}"))
    elif inits[0].level != 1:
        out.append(Violation(f"state {inits[0].name}", "initial state must be at level 1"))
    for s in a.states:
        if not 1 <= s.level <= a.levels:
            out.append(Violation(f"state {s.name}", f"level {s.level} outside [1, {a.levels}]"))
        c = a.clock_map.get(s.act)
        if c is None:
            out.append(Violation(f"state {s.name}", f"unknown active clock {s.act}"))
        elif c.level != s.level:
            out.append(Violation(f"state {s.name}", f"active clock {s.act} is not at the state level"))
        if s.policy not in POLICIES:
            out.append(Violation(f"state {s.name}", f"unknown policy {s.policy}"))
        elif s.policy != "lazy":
            out.append(Violation(f"state {s.name}", f"policy annotation '{s.policy}' (desugar before analysis)"))
    params = set(a.params)
    for i, t in enumerate(a.transitions):
        where = f"transition {i} ({t.source} -> {t.target})"
        src, dst = a.state_map.get(t.source), a.state_map.get(t.target)
        if src is None or dst is None:
            out.append(Violation(where, "unknown source or target state"))
            continue
        k, k2 = src.level, dst.level
        for atom in t.guard:
            out.extend(_check_atom(a, atom, k, where, params))
        assigned = dict(t.update)
        for z, rhs in t.update:
            if z not in a.clock_map:
                out.append(Violation(where, f"update of unknown clock {z}"))
                continue
            bad = rhs.parameters() - params
            if bad:
                out.append(Violation(where, f"unknown parameters {sorted(bad)} in update of {z}"))
            unknown = [n for n in rhs.clocks() if n not in a.clock_map]
            if unknown:
                out.append(Violation(where, f"update of {z} mentions unknown clocks {unknown}"))
                continue
            lz = a.level_of(z)
            if lz > max(k, k2) or (k <= k2 and lz > k):
                out.append(Violation(where, f"update of {z} at level {lz} not allowed on a level {k}->{k2} transition"))
                continue
            kind = classify_update(a, z, rhs)
            if k > k2 and lz > k2:
                if not (rhs.is_constant() and rhs.const.is_zero()):
                    out.append(Violation(where, f"clock {z} of a level in ({k2},{k}] must be reset to 0"))
                continue
            if kind == "invalid":
                out.append(Violation(where, f"update of {z} must be unchanged, a same-level copy, or linear in lower main clocks"))
            elif kind == "copy":
                zc = a.clock_map[z]
                if not (not zc.main or lz == k == k2):
                    out.append(Violation(where, f"copy into {z}: not a main clock of level lower than the current one"))
        if k > k2:
            for c in a.clocks:
                if k2 < c.level <= k and c.name not in assigned:
                    # implicit reset; normalized by the parser, tolerated here
                    pass
    return out


def _check_atom(a: Automaton, atom, k: int, where: str, params: set) -> list:
    out = []
    if atom.op not in OPS:
        return [Violation(where, f"unknown operator {atom.op}")]
    if isinstance(atom, DiffAtom):
        for n in (atom.left, atom.right):
            if n not in a.clock_map:
                return [Violation(where, f"guard mentions unknown clock {n}")]
        if a.level_of(atom.left) != k or a.level_of(atom.right) != k:
            out.append(Violation(where, "guard outside C(X_k, X_<k): difference of clocks not at the source level"))
        return out
    e = atom.expr
    bad = e.parameters() - params
    if bad:
        out.append(Violation(where, f"unknown parameters {sorted(bad)} in guard"))
    own = 0
    for n in e.clocks():
        c = a.clock_map.get(n)
        if c is None:
            out.append(Violation(where, f"guard mentions unknown clock {n}"))
            continue
        if c.level == k:
            own += 1
        elif c.level > k or not c.main:
            out.append(Violation(where, f"guard outside C(X_k, X_<k): clock {n}"))
    if own > 1:
        out.append(Violation(where, "guard outside C(X_k, X_<k): more than one clock of the source level"))
    return out


def reset_implicit(a: Automaton) -> Automaton:
    """Add the explicit ``z := 0`` resets of level-decreasing transitions."""
    ts = []
    for t in a.transitions:
        k, k2 = a.state_map[t.source].level, a.state_map[t.target].level
        if k > k2:
            upd = dict(t.update)
            for c in a.clocks:
                if k2 < c.level <= k:
                    upd[c.name] = ClockExpr.constant(0)
            ts.append(replace(t, update=_sorted_update(upd)))
        else:
            ts.append(t)
    return a.with_transitions(ts)


def _sorted_update(upd: dict) -> tuple:
    return tuple(sorted(((z, e) for z, e in upd.items() if e.single_clock() != z), key=lambda it: var_key(it[0])))


def desugar_policies(a: Automaton) -> Automaton:
    """Replace urgent/delayed annotations by one fresh auxiliary clock per level."""
    special = [s for s in a.states if s.policy in ("urgent", "delayed")]
    if not special:
        return replace(a, states=tuple(replace(s, policy="lazy") for s in a.states))
    taken = {c.name for c in a.clocks} | set(a.params)
    fresh = {}
    for lvl in sorted({s.level for s in special}):
        base = f"y{lvl}"
        name, i = base, 0
        while name in taken:
            i += 1
            name = f"{base}_{i}"
        taken.add(name)
        fresh[lvl] = name
    clocks = a.clocks + tuple(Clock(n, lvl, False) for lvl, n in fresh.items())
    policy = {s.name: s for s in a.states}
    ts = []
    for t in a.transitions:
        src, dst = policy[t.source], policy[t.target]
        upd = dict(t.update)
        guard = list(t.guard)
        i = dst.level
        if i in fresh and src.level >= i:
            # entering q from a level j >= i: remember the active clock value
            act = upd.get(dst.act, ClockExpr.clock(dst.act))
            upd[fresh[i]] = act
        if src.policy == "urgent":
            guard.append(DiffAtom(fresh[src.level], src.act, "="))
        elif src.policy == "delayed":
            guard.append(DiffAtom(fresh[src.level], src.act, "<"))
        ts.append(replace(t, guard=tuple(guard), update=_sorted_update(upd)))
    states = tuple(replace(s, policy="lazy") for s in a.states)
    return replace(a, clocks=clocks, states=states, transitions=tuple(ts))
