"""
Exact Fourier-Motzkin elimination over the rationals.

A constraint is ``(coeffs, const, op)`` meaning ``sum(coeffs[v]*v) + const op 0``
with ``op`` one of ``<``, ``<=``, ``=``, ``>=``, ``>``.  Equalities are used for
substitution before any pairwise combination, which keeps the systems built
along short paths small.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional

Constraint = tuple  # (dict[str, Fraction], Fraction, op)


def make(coeffs: Mapping[str, object], const=0, op: str = "<=") -> Constraint:
    c = {v: Fraction(a) for v, a in coeffs.items() if a}
    return _norm(c, Fraction(const), op)


def _norm(c: dict, k: Fraction, op: str) -> Constraint:
    if op in (">", ">="):
        c = {v: -a for v, a in c.items()}
        k = -k
        op = "<" if op == ">" else "<="
    # scale so the first coefficient has absolute value 1, for deduplication
    if c:
        first = abs(c[min(c)])
        c = {v: a / first for v, a in c.items()}
        k = k / first
        if op == "=" and c[min(c)] < 0:
            c = {v: -a for v, a in c.items()}
            k = -k
    return (c, k, op)


def _key(con: Constraint):
    c, k, op = con
    return (tuple(sorted(c.items())), k, op)


def _holds_const(k: Fraction, op: str) -> bool:
    return k < 0 if op == "<" else (k <= 0 if op == "<=" else k == 0)


def _substitute(con: Constraint, v: str, expr: dict, const: Fraction) -> Constraint:
    """Replace variable ``v`` by ``sum(expr) + const``."""
    c, k, op = con
    a = c.get(v)
    if not a:
        return con
    out = {u: b for u, b in c.items() if u != v}
    for u, b in expr.items():
        out[u] = out.get(u, 0) + a * b
    out = {u: b for u, b in out.items() if b}
    return _norm(out, k + a * const, op)


class _Step:
    """Record of one eliminated variable, for back-substitution."""

    def __init__(self, var, kind, payload):
        self.var = var
        self.kind = kind  # 'eq' -> (expr, const) ; 'fm' -> (lowers, uppers) ; 'free'
        self.payload = payload


def _eliminate(cons: list, order: list):
    steps = []
    cons = _dedup(cons)
    while True:
        bad = [x for x in cons if not x[0] and not _holds_const(x[1], x[2])]
        if bad:
            return None, steps
        cons = [x for x in cons if x[0]]
        eq = next((x for x in cons if x[2] == "="), None)
        if eq is not None:
            c, k, _ = eq
            v = min(c, key=lambda u: (order.index(u) if u in order else len(order), u))
            a = c[v]
            expr = {u: -b / a for u, b in c.items() if u != v}
            const = -k / a
            steps.append(_Step(v, "eq", (expr, const)))
            cons = _dedup([_substitute(x, v, expr, const) for x in cons if x is not eq])
            continue
        if not cons:
            return [], steps
        live = {v for x in cons for v in x[0]}
        # cheapest variable first: fewest generated pairs
        def cost(v):
            lo = sum(1 for x in cons if x[0].get(v, 0) < 0)
            up = sum(1 for x in cons if x[0].get(v, 0) > 0)
            return (lo * up - lo - up, order.index(v) if v in order else len(order), v)
        v = min(live, key=cost)
        lowers, uppers, rest = [], [], []
        for x in cons:
            a = x[0].get(v, 0)
            if a == 0:
                rest.append(x)
                continue
            # a*v + r op 0  ->  v op' -r/a
            expr = {u: -b / a for u, b in x[0].items() if u != v}
            bound = (expr, -x[1] / a, x[2] == "<")
            (uppers if a > 0 else lowers).append(bound)
        steps.append(_Step(v, "fm", (lowers, uppers)))
        for le, lk, ls in lowers:
            for ue, uk, us in uppers:
                # le + lk  (<) ue + uk
                diff = dict(le)
                for u, b in ue.items():
                    diff[u] = diff.get(u, 0) - b
                diff = {u: b for u, b in diff.items() if b}
                rest.append(_norm(diff, lk - uk, "<" if (ls or us) else "<="))
        cons = _dedup(rest)


def _dedup(cons: Iterable[Constraint]) -> list:
    seen, out = set(), []
    for x in cons:
        key = _key(x)
        if key not in seen:
            seen.add(key)
            out.append(x)
    return out


def _value(expr: dict, const: Fraction, env: dict) -> Fraction:
    return const + sum((b * env.get(u, Fraction(0)) for u, b in expr.items()), Fraction(0))


def _pick_midpoint(lo, lo_strict, hi, hi_strict, rng) -> Fraction:
    if lo is None and hi is None:
        return Fraction(0)
    if hi is None:
        return lo + 1 if lo_strict else lo
    if lo is None:
        return hi - 1 if hi_strict else hi
    if lo == hi:
        return lo
    if not lo_strict:
        return lo
    if not hi_strict:
        return hi
    return (lo + hi) / 2


def _pick_random(lo, lo_strict, hi, hi_strict, rng: random.Random) -> Fraction:
    if lo is None and hi is None:
        lo, lo_strict = Fraction(0), False
    if hi is None:
        span = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        return lo + span if lo_strict or rng.random() < 0.7 else lo
    if lo is None:
        span = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        return hi - span if hi_strict or rng.random() < 0.7 else hi
    if lo == hi:
        return lo
    choices = []
    if not lo_strict:
        choices.append(lo)
    if not hi_strict:
        choices.append(hi)
    if choices and rng.random() < 0.25:
        return rng.choice(choices)
    t = Fraction(rng.randint(1, 15), 16)
    return lo + (hi - lo) * t


def solve(constraints: Iterable[Constraint], variables: Iterable[str] = (),
          chooser: Optional[Callable] = None, rng: Optional[random.Random] = None) -> Optional[dict]:
    """A satisfying assignment, or None when the system is infeasible."""
    cons = list(constraints)
    order = list(variables)
    for x in cons:
        for v in x[0]:
            if v not in order:
                order.append(v)
    residual, steps = _eliminate(cons, order)
    if residual is None:
        return None
    chooser = chooser or _pick_midpoint
    env: dict = {}
    for st in reversed(steps):
        # every variable a step mentions was eliminated after it
        if st.kind == "eq":
            expr, const = st.payload
            env[st.var] = _value(expr, const, env)
            continue
        lowers, uppers = st.payload
        lo, lo_s, hi, hi_s = None, False, None, False
        for e, k, s in lowers:
            val = _value(e, k, env)
            if lo is None or val > lo or (val == lo and s):
                lo, lo_s = val, s
        for e, k, s in uppers:
            val = _value(e, k, env)
            if hi is None or val < hi or (val == hi and s):
                hi, hi_s = val, s
        env[st.var] = chooser(lo, lo_s, hi, hi_s, rng)
    for v in order:
        env.setdefault(v, Fraction(0))
    if not satisfies(cons, env):
        raise AssertionError("Fourier-Motzkin witness does not satisfy the system")
    return env


def feasible(constraints: Iterable[Constraint]) -> bool:
    residual, _ = _eliminate(list(constraints), [])
    return residual is not None


def sample(constraints: Iterable[Constraint], rng: random.Random, variables: Iterable[str] = ()) -> Optional[dict]:
    """A random point of the (possibly unbounded) polyhedron, or None if empty."""
    return solve(constraints, variables, chooser=_pick_random, rng=rng)


def satisfies(constraints: Iterable[Constraint], env: Mapping[str, Fraction]) -> bool:
    for c, k, op in constraints:
        val = k + sum((a * env.get(v, Fraction(0)) for v, a in c.items()), Fraction(0))
        if not _holds_const(val, op):
            return False
    return True
