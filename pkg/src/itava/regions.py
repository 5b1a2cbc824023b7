"""
Parameter regions: a sign for every PolPar member plus an ordered partition
of the parameter-only members of E_1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .arith import Poly, RatFun
from .exprsets import ExprSet
from .model import FLIP, compare
from .smt import SAT, UNKNOWN, UNSAT, CheckResult, Oracle

SIGN_OP = {-1: "<", 0: "=", 1: ">"}


@dataclass(frozen=True)
class PolyAtom:
    poly: Poly
    op: str

    def __str__(self) -> str:
        return f"{self.poly} {self.op} 0"


@dataclass(frozen=True)
class Formula:
    """Quantifier-free formula over parameters: ``kind`` is 'atom', 'and', 'or' or 'raw'."""
    kind: str
    atom: Optional[PolyAtom] = None
    children: tuple = ()
    raw: str = ""

    @staticmethod
    def conj(items) -> "Formula":
        return Formula("and", children=tuple(items))

    @staticmethod
    def of_atoms(atoms) -> "Formula":
        return Formula("and", children=tuple(Formula("atom", PolyAtom(p, op)) for p, op in atoms))

    def atoms(self):
        if self.kind == "atom":
            yield self.atom
        for c in self.children:
            yield from c.atoms()

    def is_conjunctive(self) -> bool:
        return self.kind == "atom" or (self.kind == "and" and all(c.is_conjunctive() for c in self.children))

    def disjuncts(self) -> list:
        """Disjunctive normal form as a list of atom lists."""
        if self.kind == "atom":
            return [[self.atom]]
        if self.kind == "and":
            out = [[]]
            for c in self.children:
                out = [x + y for x in out for y in c.disjuncts()]
            return out
        if self.kind == "or":
            return [d for c in self.children for d in c.disjuncts()]
        raise ValueError("raw formulas have no normal form")

    def __str__(self) -> str:
        if self.kind == "atom":
            return str(self.atom)
        if self.kind == "raw":
            return self.raw
        if not self.children:
            return "true" if self.kind == "and" else "false"
        sep = " and " if self.kind == "and" else " or "
        return "(" + sep.join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class ConstraintSystem:
    atoms: tuple  # ((Poly, op), ...)
    scope: Optional[Formula] = None

    def lines(self) -> list:
        out = [f"{p} {op} 0" for p, op in self.atoms]
        if self.scope is not None and (self.scope.kind != "and" or self.scope.children):
            out.append(f"scope {self.scope}")
        return out

    def __str__(self) -> str:
        return "\n".join(self.lines())

    def holds(self, pi) -> bool:
        from .smt import formula_holds
        try:
            return all(compare(p.evaluate(pi), 0, op) for p, op in self.atoms) and formula_holds(self.scope, pi)
        except ZeroDivisionError:
            return False


@dataclass(frozen=True)
class ParamRegion:
    signs: tuple  # ((Poly, sign), ...) in PolPar order
    order1: tuple  # ascending blocks of E_1 indices (parameter-only members)
    open_only: bool = False
    witness: Optional[dict] = None
    status: str = SAT
    index: int = 0

    @property
    def sigma(self) -> dict:
        return dict(self.signs)

    def contains(self, pi, es: ExprSet) -> bool:
        return region_constraints(self, es).holds(pi)

    def describe(self, es: ExprSet) -> str:
        chain = " < ".join(" = ".join(str(es.exprs[1][i]) for i in b) for b in self.order1)
        return f"region {self.index}: " + ", ".join(f"{p} {SIGN_OP[s]} 0" for p, s in self.signs) + \
            (f"; {chain}" if chain else "")


def filter_exprs(es: ExprSet, sigma: dict) -> dict:
    """Indices of the members of each E_k whose denominators do not vanish."""
    out = {}
    for k, members in es.exprs.items():
        keep = []
        for i, e in enumerate(members):
            ok = True
            for c in e.ratfuns():
                for f in c.den:
                    s = sigma.get(f)
                    if s is None:
                        raise ValueError(f"denominator factor {f} is not in PolPar")
                    if s == 0:
                        ok = False
            if ok:
                keep.append(i)
        out[k] = keep
    return out


def parameter_constants(es: ExprSet, keep1: list) -> list:
    return [i for i in keep1 if es.exprs[1][i].is_constant()]


def cleared(f: RatFun, g: RatFun, op: str, sigma: dict):
    """``f op g`` as a polynomial atom over the parameters, or a truth value when constant."""
    d = f - g
    s = 1
    for fac in d.den:
        fs = sigma[fac]
        if fs == 0:
            raise ZeroDivisionError(f"denominator factor {fac} is zero on the region")
        s *= fs
    if s < 0:
        op = FLIP[op]
    if d.num.is_constant():
        return compare(d.num.constant_value(), 0, op)
    return (d.num, op)


def sign_atoms(signs) -> list:
    return [(p, SIGN_OP[s]) for p, s in signs]


def order_atoms(order1, es: ExprSet, sigma: dict, memo: Optional[dict] = None, diffs: Optional[dict] = None):
    """Atoms stating the ordered partition; None if a constant comparison fails.

    ``memo`` caches comparisons under ``sigma``; ``diffs`` caches the
    sign-independent differences and may be shared across sign assignments.
    """
    memo = {} if memo is None else memo
    diffs = {} if diffs is None else diffs

    def rel(i, j, op):
        key = (i, j, op)
        if key not in memo:
            d = diffs.get((i, j))
            if d is None:
                d = diffs[(i, j)] = es.exprs[1][i].const - es.exprs[1][j].const
            memo[key] = cleared(d, RatFun(0), op, sigma)
        return memo[key]

    out = []
    for bi, block in enumerate(order1):
        rep = block[0]
        for other in block[1:]:
            a = rel(other, rep, "=")
            if a is False:
                return None
            if a is not True:
                out.append(a)
        if bi + 1 < len(order1):
            a = rel(rep, order1[bi + 1][0], "<")
            if a is False:
                return None
            if a is not True:
                out.append(a)
    return out


def region_constraints(r: ParamRegion, es: ExprSet, scope: Optional[Formula] = None) -> ConstraintSystem:
    atoms = sign_atoms(r.signs)
    order = order_atoms(r.order1, es, r.sigma)
    if order is None:
        atoms.append((Poly.const(1), "<"))
    else:
        atoms.extend(order)
    return ConstraintSystem(tuple(dict.fromkeys(atoms)), scope)


def check_nonempty(cs: ConstraintSystem, oracle: Oracle) -> CheckResult:
    return oracle.check(list(cs.atoms), cs.scope)


@dataclass
class EnumerationLog:
    inconclusive: int = 0
    pruned: int = 0
    emitted: int = 0
    shortcuts: int = 0


def enumerate_regions(es: ExprSet, oracle: Oracle, scope: Optional[Formula] = None,
                      open_only: bool = False, log: Optional[EnumerationLog] = None) -> Iterator[ParamRegion]:
    """Depth-first stream of nonempty regions in a fixed canonical order."""
    log = log if log is not None else EnumerationLog()
    polpar = list(es.polpar)
    signs_choice = (-1, 1) if open_only else (-1, 0, 1)
    counter = [0]
    diffs: dict = {}

    def probe(atoms, hint=None, count=True):
        # a witness of the parent query that happens to satisfy the child
        # settles it without a solver call
        if hint is not None and hint.witness is not None:
            try:
                if all(compare(p.evaluate(hint.witness), 0, op) for p, op in atoms):
                    log.shortcuts += 1
                    return hint
            except ZeroDivisionError:
                pass
        res = oracle.check(atoms, scope)
        if res.status == UNSAT:
            log.pruned += count
            return None
        if res.status == UNKNOWN:
            log.inconclusive += 1
            return None
        return res

    def bracket(c, sigma, base_atoms, blocks, last, memo):
        """Range of gap positions for ``c`` by two binary searches.

        ``c <= B_t`` is satisfiable for a suffix of the blocks and ``c >= B_t``
        for a prefix, so gaps outside [L, R + 1] are infeasible.
        """
        m = len(blocks)
        if m == 0:
            return 0, 0
        order = order_atoms(blocks, es, sigma, memo, diffs)
        rel = {}

        def sat(t, op):
            key = (t, op)
            if key not in rel:
                d = diffs.get((c, blocks[t][0]))
                if d is None:
                    d = diffs[(c, blocks[t][0])] = es.exprs[1][c].const - es.exprs[1][blocks[t][0]].const
                a = cleared(d, RatFun(0), op, sigma)
                if a is True or a is False:
                    rel[key] = a
                else:
                    rel[key] = probe(base_atoms + order + [a], last, count=False) is not None
            return rel[key]

        a, b = 0, m  # smallest t with c <= B_t satisfiable (m if none)
        while a < b:
            mid = (a + b) // 2
            if sat(mid, "<="):
                b = mid
            else:
                a = mid + 1
        lo = a
        a, b = -1, m - 1  # largest t with c >= B_t satisfiable (-1 if none)
        while a < b:
            mid = (a + b + 1) // 2
            if sat(mid, ">="):
                a = mid
            else:
                b = mid - 1
        return lo, min(a + 1, m)

    def orders(signs, sigma, base_atoms, consts, j, blocks, last, memo):
        if j == len(consts):
            r = ParamRegion(tuple(signs), tuple(tuple(b) for b in blocks), open_only,
                            last.witness, last.status, counter[0])
            counter[0] += 1
            log.emitted += 1
            yield r
            return
        c = consts[j]
        lo, hi = bracket(c, sigma, base_atoms, blocks, last, memo)
        cands = []
        for pos in range(lo, hi + 1):
            cands.append(("new", pos))
            if pos < min(hi, len(blocks)) and not open_only:
                cands.append(("join", pos))
        for kind, pos in cands:
            if kind == "new":
                nb = blocks[:pos] + [[c]] + blocks[pos:]
            else:
                nb = [list(b) for b in blocks]
                nb[pos] = nb[pos] + [c]
            atoms = order_atoms(nb, es, sigma, memo, diffs)
            if atoms is None:
                log.pruned += 1
                continue
            res = probe(base_atoms + atoms, last)
            if res is None:
                continue
            yield from orders(signs, sigma, base_atoms, consts, j + 1, nb, res, memo)

    def signs_dfs(i, signs, last):
        if i == len(polpar):
            sigma = dict(signs)
            keep = filter_exprs(es, sigma)
            consts = parameter_constants(es, keep[1])
            yield from orders(signs, sigma, sign_atoms(signs), consts, 0, [], last, {})
            return
        for s in signs_choice:
            nxt = signs + [(polpar[i], s)]
            res = probe(sign_atoms(nxt), last)
            if res is None:
                continue
            yield from signs_dfs(i + 1, nxt, res)

    root = probe([])
    if root is not None:
        yield from signs_dfs(0, [], root)


def region_of(pi: dict, es: ExprSet, index: int = -1) -> ParamRegion:
    """The (unique) region containing a concrete valuation."""
    pi = {p: Fraction(v) for p, v in pi.items()}
    signs = []
    for p in es.polpar:
        v = p.evaluate(pi)
        signs.append((p, (v > 0) - (v < 0)))
    sigma = dict(signs)
    keep = filter_exprs(es, sigma)
    consts = parameter_constants(es, keep[1])
    vals = {}
    for i in consts:
        vals[i] = es.exprs[1][i].const.evaluate(pi)
    blocks = []
    for v in sorted(set(vals.values())):
        blocks.append(tuple(i for i in consts if vals[i] == v))
    return ParamRegion(tuple(signs), tuple(blocks), False, pi, SAT, index)


def same_region(r1: ParamRegion, r2: ParamRegion) -> bool:
    def norm(r):
        return (tuple((str(p), s) for p, s in r.signs), tuple(tuple(sorted(b)) for b in r.order1))
    return norm(r1) == norm(r2)
