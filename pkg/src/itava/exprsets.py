"""
Expression sets E_k and the parameter polynomial list PolPar.

Saturation works level by level from the top.  At level k the guards of
edges leaving level-k states contribute their comparands, E_k is closed
under the updates of edges staying at or above k, and every edge entering
level k or higher from below contributes the comparands of pairwise
differences of updated members to the source level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

from .arith import Poly, RatFun, var_key
from .model import Automaton, ClockExpr, LinearAtom

DEFAULT_CAP = 200_000

# a fixed point that is unlikely to be a root of any polynomial built here;
# coordinates differ per parameter so symmetric polynomials do not collide
def _generic_value(i: int) -> Fraction:
    primes = (1009, 1013, 1019, 1021, 1031, 1033, 1039, 1049, 1051, 1061)
    return Fraction(primes[i % len(primes)] + 7 * (i // len(primes)), 97 + 2 * i)


class SaturationError(RuntimeError):
    pass


def normalize(c: ClockExpr, k: int, a: Automaton) -> ClockExpr:
    """Rescale so the level-``k`` clock has coefficient 1 (unchanged when it is absent)."""
    z = _level_clock(c, k, a)
    if z is None:
        return c
    return c.divide(c.coeff(z))


def _level_clock(c: ClockExpr, k: int, a: Automaton) -> Optional[str]:
    own = [n for n in c.clocks() if a.level_of(n) == k]
    if len(own) > 1:
        raise ValueError(f"{c} has more than one clock of level {k}")
    return own[0] if own else None


@dataclass(frozen=True)
class Decomposition:
    lead: Poly
    comp: Optional[ClockExpr]
    compnorm: Optional[ClockExpr]


def decompose(c: ClockExpr, k: int, a: Automaton) -> Decomposition:
    z = _level_clock(c, k, a)
    ak = c.coeff(z) if z is not None else RatFun(0)
    lead = ak.num
    rest = c.drop({z}) if z is not None else c
    comp = None
    if not (lead.is_constant() and not lead.is_zero()):
        comp = rest
    compnorm = None
    if not lead.is_zero():
        compnorm = (-rest).divide(ak)
    return Decomposition(lead, comp, compnorm)


def apply_update(c: ClockExpr, update) -> ClockExpr:
    mapping = dict(update) if not isinstance(update, dict) else update
    return c.substitute(mapping)


class ExprSet:
    """Per-level deduplicated expression lists plus PolPar."""

    def __init__(self, a: Automaton):
        self.levels = a.levels
        self.params = tuple(sorted(a.params, key=var_key))
        self._point = {p: _generic_value(i) for i, p in enumerate(self.params)}
        self.exprs = {k: [] for k in range(1, a.levels + 1)}
        self._index = {k: {} for k in range(1, a.levels + 1)}
        self.polpar: list = []
        self._polpar_set: set = set()
        for k in range(1, a.levels + 1):
            for z in a.clocks_at(k):
                self.add(k, ClockExpr.clock(z))
            self.add(k, ClockExpr.constant(0))

    def _key(self, e: ClockExpr):
        try:
            vals = tuple(c.evaluate(self._point) for _, c in e.coeffs)
            return (e.clocks(), vals, e.const.evaluate(self._point))
        except ZeroDivisionError:
            return (e.clocks(), "pole")

    def index_of(self, k: int, e: ClockExpr) -> Optional[int]:
        for i in self._index[k].get(self._key(e), ()):
            if self.exprs[k][i] == e:
                return i
        return None

    def __contains__(self, item) -> bool:
        k, e = item
        return self.index_of(k, e) is not None

    def add(self, k: int, e: ClockExpr) -> bool:
        if self.index_of(k, e) is not None:
            return False
        self._index[k].setdefault(self._key(e), []).append(len(self.exprs[k]))
        self.exprs[k].append(e)
        return True

    def add_polpar(self, p: Poly) -> bool:
        if p.is_constant():
            return False
        _, monic = p.normalized()
        if monic in self._polpar_set:
            return False
        self._polpar_set.add(monic)
        self.polpar.append(monic)
        return True

    def __len__(self) -> int:
        return sum(len(v) for v in self.exprs.values())

    def sizes(self) -> dict:
        return {k: len(v) for k, v in self.exprs.items()}

    def dump(self) -> str:
        lines = [f"PolPar {p}" for p in self.polpar]
        for k in range(self.levels, 0, -1):
            for e in self.exprs[k]:
                lines.append(f"E{k} {e}")
        return "\n".join(lines) + "\n"


@dataclass
class SaturationStats:
    rounds: dict = field(default_factory=dict)
    pairs: int = 0


def _register(es: ExprSet, c: ClockExpr, k: int, a: Automaton) -> int:
    d = decompose(c, k, a)
    added = 0
    if not d.lead.is_constant():
        es.add_polpar(d.lead)
    for e in (d.comp, d.compnorm):
        if e is not None and es.add(k, e):
            added += 1
    return added


def saturate(a: Automaton, cap: Optional[int] = None, stats: Optional[SaturationStats] = None) -> ExprSet:
    """Build PolPar and every E_k; ``cap`` bounds the size of each E_k."""
    cap = cap if cap is not None else DEFAULT_CAP
    es = ExprSet(a)
    level = {s.name: s.level for s in a.states}
    n = a.levels
    limits = {k: min(cap, size_bound(a, k)) for k in range(1, n + 1)}
    for k in range(n, 0, -1):
        # guards of edges leaving level-k states
        for t in a.transitions:
            if level[t.source] != k:
                continue
            for g in t.guard:
                if isinstance(g, LinearAtom):
                    _register(es, g.expr, k, a)
        # closure under updates of edges staying at or above k
        stay = [t for t in a.transitions if level[t.source] >= k and level[t.target] >= k]
        frontier = list(es.exprs[k])
        rounds = 0
        while frontier:
            rounds += 1
            new = []
            for t in stay:
                if not t.update:
                    continue
                for c in frontier:
                    img = apply_update(c, t.update)
                    if es.add(k, img):
                        new.append(img)
                        if len(es.exprs[k]) > limits[k]:
                            raise SaturationError(
                                f"|E_{k}| exceeds {limits[k]} during update closure")
            frontier = new
        if stats is not None:
            stats.rounds[k] = rounds
        # edges entering level >= k from below
        members = sorted(es.exprs[k], key=str, reverse=True)
        for t in a.transitions:
            lq = level[t.source]
            if not (lq < k <= level[t.target]):
                continue
            higher = {c.name for c in a.clocks if c.level > lq}
            images = [apply_update(c, t.update).drop(higher) for c in members]
            for (i, ci), (j, cj) in combinations(enumerate(images), 2):
                if stats is not None:
                    stats.pairs += 1
                _register(es, ci - cj, lq, a)
                if len(es.exprs[lq]) > limits[lq]:
                    raise SaturationError(f"|E_{lq}| exceeds {limits[lq]} while handling level {k}")
    return es


def size_bound(a: Automaton, k: int) -> int:
    """(H+M)^(2^(n-k)) * U^(2^(n(n-k+1))), saturated at a large sentinel."""
    H, M, U = _hmu(a)
    n = a.levels
    log = (2 ** (n - k)) * math.log2(H + M) + (2 ** (n * (n - k + 1))) * math.log2(U)
    if log > 60:
        return 1 << 60
    return int(round(2 ** log))


def _hmu(a: Automaton):
    H = sum(len(t.guard) for t in a.transitions)
    U = max(2, sum(len(t.update) for t in a.transitions))
    M = max((len(a.clocks_at(k)) for k in range(1, a.levels + 1)), default=1)
    return H, M, U


@dataclass
class BoundsReport:
    sizes: dict
    size_bounds: dict
    max_bits: int
    bits_bound: int
    max_degree: int
    degree_bound: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = []
        for k in sorted(self.sizes):
            lines.append(f"|E_{k}| = {self.sizes[k]} <= {self.size_bounds[k]}")
        lines.append(f"bits {self.max_bits} <= {self.bits_bound}")
        lines.append(f"degree {self.max_degree} <= {self.degree_bound}")
        lines.extend(f"VIOLATION {v}" for v in self.violations)
        return "\n".join(lines)


def _expr_bits(e: ClockExpr) -> int:
    return sum(c.bits() for c in e.ratfuns())


def _expr_degree(e: ClockExpr) -> int:
    return max((c.degree() for c in e.ratfuns()), default=0)


def check_bounds(es: ExprSet, a: Automaton) -> BoundsReport:
    n = a.levels
    H, M, U = _hmu(a)
    exprs = [g.expr for t in a.transitions for g in t.guard if isinstance(g, LinearAtom)]
    exprs += [e for t in a.transitions for _, e in t.update]
    b0 = max([2] + [_expr_bits(e) for e in exprs])
    d0 = max([0] + [_expr_degree(e) for e in exprs])
    fact = math.factorial(n + 1)
    bits_bound = fact ** 2 * (n + 1) * 2 ** (3 * n + 1) * b0
    degree_bound = fact * 5 ** n * d0
    violations = []
    sizes = es.sizes()
    size_bounds = {}
    for k in range(1, n + 1):
        log = (2 ** (n - k)) * math.log2(H + M) + (2 ** (n * (n - k + 1))) * math.log2(U)
        size_bounds[k] = f"2^{log:.2f}" if log > 60 else str(int(round(2 ** log)))
        if sizes[k] > 0 and math.log2(sizes[k]) > log + 1e-9:
            violations.append(f"|E_{k}| = {sizes[k]} exceeds 2^{log:.2f}")
    max_bits = 0
    max_degree = 0
    for k in range(1, n + 1):
        for e in es.exprs[k]:
            max_bits = max(max_bits, _expr_bits(e))
            max_degree = max(max_degree, _expr_degree(e))
    for p in es.polpar:
        max_bits = max(max_bits, p.bits())
        max_degree = max(max_degree, p.degree())
    if max_bits > bits_bound:
        violations.append(f"bit size {max_bits} exceeds {bits_bound}")
    if max_degree > degree_bound:
        violations.append(f"degree {max_degree} exceeds {degree_bound}")
    return BoundsReport(sizes, size_bounds, max_bits, bits_bound, max_degree, degree_bound, violations)
