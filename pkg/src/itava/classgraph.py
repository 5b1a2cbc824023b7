"""
Class automaton of a parameter region.

A class is a state together with, for every level up to the state level, an
ordered partition of the filtered E_k.  Expressions are referred to by their
index in ``ExprSet.exprs[k]``.  Everything that depends only on the region
and a transition (guard decisions, update images, the recipes comparing
higher-level expressions after an upward edge) is compiled once per build.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .arith import RatFun, sign_of
from .exprsets import ExprSet, apply_update, decompose
from .model import Automaton, ClockExpr, DiffAtom, compare
from .regions import ParamRegion, filter_exprs
from .semantics import DELAY, AbstractPath, Config

DEFAULT_CLASS_CAP = 1_000_000
TIME = "time"


class ClassGraphError(RuntimeError):
    pass


@dataclass(frozen=True)
class Class:
    state: str
    orders: tuple  # per level 1..lambda(state): tuple of blocks (sorted index tuples), ascending
    _pos: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def position(self, k: int) -> dict:
        pos = self._pos.get(k)
        if pos is None:
            pos = self._pos[k] = {i: p for p, b in enumerate(self.orders[k - 1]) for i in b}
        return pos


@dataclass
class ClassAutomaton:
    automaton: Automaton
    region: ParamRegion
    exprsets: ExprSet
    classes: list
    index: dict
    edges: list  # (src, label, dst) with label a transition index or TIME
    parent: dict = field(default_factory=dict)

    @property
    def initial(self) -> int:
        return 0

    def states(self) -> set:
        return {c.state for c in self.classes}

    def find(self, targets) -> Optional[int]:
        targets = set(targets)
        for i, c in enumerate(self.classes):
            if c.state in targets:
                return i
        return None

    def path_to(self, i: int) -> AbstractPath:
        steps = []
        while i != 0:
            src, label = self.parent[i]
            steps.append(DELAY if label == TIME else label)
            i = src
        return AbstractPath.of(reversed(steps))

    def successors(self, i: int) -> list:
        return [(lab, d) for s, lab, d in self._adj().get(i, [])]

    def _adj(self):
        if not hasattr(self, "_adj_cache"):
            adj = {}
            for e in self.edges:
                adj.setdefault(e[0], []).append(e)
            self._adj_cache = adj
        return self._adj_cache


class _Compiled:
    """Region-specific decision tables for one build."""

    def __init__(self, a: Automaton, region: ParamRegion, es: ExprSet):
        self.a = a
        self.es = es
        self.sigma = region.sigma
        self.keep = filter_exprs(es, self.sigma)
        self.keepset = {k: set(v) for k, v in self.keep.items()}
        self.level = {s.name: s.level for s in a.states}
        self.guards = {}
        self.images = {}
        self.identity = {}
        self.recipes = {}
        for ti, t in enumerate(a.transitions):
            self.guards[ti] = self._compile_guard(t)

    # lookups
    def idx(self, k: int, e: ClockExpr, what: str) -> int:
        i = self.es.index_of(k, e)
        if i is None or i not in self.keepset[k]:
            raise ClassGraphError(f"{what} {e} missing from E_{k} for this region (saturation bug)")
        return i

    def lookup(self, k: int, e: ClockExpr) -> Optional[int]:
        i = self.es.index_of(k, e)
        return i if i is not None and i in self.keepset[k] else None

    def lead_sign(self, a_l: RatFun) -> int:
        s = sign_of(a_l, self.sigma)
        if s is None:
            raise ClassGraphError(f"sign of {a_l} is not determined by the region")
        return s

    def _comparison(self, c: ClockExpr, op: str, l: int):
        """``c op 0`` as (left, op, right) on block positions at level ``l``."""
        zero = self.idx(l, ClockExpr.constant(0), "constant")
        own = [n for n in c.clocks() if self.a.level_of(n) == l]
        if len(own) > 1:
            raise ClassGraphError(f"{c} has more than one clock of level {l}")
        a_l = c.coeff(own[0]) if own else RatFun(0)
        s = self.lead_sign(a_l) if own else 0
        d = decompose(c, l, self.a)
        if s == 0:
            comp = c.drop(set(own))
            i = self.lookup(l, comp)
            if i is not None:
                return (i, op, zero)
            i = self.lookup(l, -comp)
            if i is None:
                raise ClassGraphError(f"comparand {comp} missing from E_{l}")
            return (zero, op, i)
        z = self.idx(l, ClockExpr.clock(own[0]), "clock")
        cn = self.idx(l, d.compnorm, "comparand")
        return (z, op, cn) if s > 0 else (cn, op, z)

    def _compile_guard(self, t):
        l = self.level[t.source]
        out = []
        for g in t.guard:
            if isinstance(g, DiffAtom):
                out.append((self.idx(l, ClockExpr.clock(g.left), "clock"), g.op,
                            self.idx(l, ClockExpr.clock(g.right), "clock")))
            else:
                out.append(self._comparison(g.expr, g.op, l))
        return out

    def image(self, ti: int, k: int) -> dict:
        key = (ti, k)
        if key not in self.images:
            t = self.a.transitions[ti]
            img = {i: self.idx(k, apply_update(self.es.exprs[k][i], t.update), "image")
                   for i in self.keep[k]}
            self.images[key] = img
            self.identity[key] = all(i == j for i, j in img.items())
        return self.images[key]

    def recipe(self, ti: int, k: int):
        """For every ordered pair (g, h) at level k above the source level, how to decide g <= h."""
        key = (ti, k)
        if key in self.recipes:
            return self.recipes[key]
        t = self.a.transitions[ti]
        l = self.level[t.source]
        higher = {c.name for c in self.a.clocks if c.level > l}
        imgs = {i: apply_update(self.es.exprs[k][i], t.update).drop(higher) for i in self.keep[k]}
        table = {}
        for g in self.keep[k]:
            for h in self.keep[k]:
                if g == h:
                    continue
                table[(g, h)] = self._comparison(imgs[g] - imgs[h], "<=", l)
        self.recipes[key] = table
        return table

    def firable(self, cls: Class, ti: int) -> bool:
        l = self.level[cls.state]
        pos = cls.position(l)
        return all(compare(pos[x], pos[y], op) for x, op, y in self.guards[ti])

    def discrete(self, cls: Class, ti: int) -> Class:
        t = self.a.transitions[ti]
        l = self.level[t.source]
        l2 = self.level[t.target]
        orders = []
        for k in range(1, l2 + 1):
            if k <= l:
                img = self.image(ti, k)
                if self.identity[(ti, k)]:
                    orders.append(cls.orders[k - 1])
                    continue
                pos = cls.position(k)
                orders.append(_blocks_by_key(self.keep[k], lambda i: pos[img[i]]))
            else:
                pos = cls.position(l)
                table = self.recipe(ti, k)

                def le(g, h):
                    if g == h:
                        return True
                    x, op, y = table[(g, h)]
                    return compare(pos[x], pos[y], op)

                orders.append(_blocks_by_relation(self.keep[k], le))
        return Class(t.target, tuple(orders))

    def time(self, cls: Class) -> Class:
        st = self.a.state_map[cls.state]
        l = st.level
        act = self.idx(l, ClockExpr.clock(st.act), "clock")
        blocks = [list(b) for b in cls.orders[l - 1]]
        p = next(j for j, b in enumerate(blocks) if act in b)
        if len(blocks[p]) == 1:
            if p == len(blocks) - 1:
                return cls
            merged = sorted(blocks[p + 1] + [act])
            blocks = blocks[:p] + [merged] + blocks[p + 2:]
        else:
            rest = [i for i in blocks[p] if i != act]
            blocks = blocks[:p] + [rest, [act]] + blocks[p + 1:]
        orders = list(cls.orders)
        orders[l - 1] = tuple(tuple(sorted(b)) for b in blocks)
        return Class(cls.state, tuple(orders))

    def initial(self, region: ParamRegion) -> Class:
        zero = self.idx(1, ClockExpr.constant(0), "constant")
        clocks = [self.idx(1, ClockExpr.clock(z), "clock") for z in self.a.clocks_at(1)]
        blocks = []
        for b in region.order1:
            b = list(b)
            if zero in b:
                b = b + clocks
            blocks.append(tuple(sorted(b)))
        if self.a.initial.level != 1:
            raise ClassGraphError("the initial state must be at level 1")
        return Class(self.a.initial.name, (tuple(blocks),))


def _blocks_by_key(items, key) -> tuple:
    groups = {}
    for i in items:
        groups.setdefault(key(i), []).append(i)
    return tuple(tuple(sorted(groups[k])) for k in sorted(groups))


def _blocks_by_relation(items, le) -> tuple:
    """Ordered partition from a total preorder given pairwise; checks consistency."""
    import functools

    def cmp(g, h):
        a, b = le(g, h), le(h, g)
        if a and b:
            return 0
        if a:
            return -1
        if b:
            return 1
        raise ClassGraphError(f"expressions {g} and {h} are incomparable")

    ordered = sorted(items, key=functools.cmp_to_key(cmp))
    blocks = []
    for i in ordered:
        if blocks and cmp(blocks[-1][0], i) == 0:
            blocks[-1].append(i)
        else:
            blocks.append([i])
    # every pair must agree with the block positions
    pos = {i: p for p, b in enumerate(blocks) for i in b}
    for g in items:
        for h in items:
            if le(g, h) != (pos[g] <= pos[h]):
                raise ClassGraphError("pairwise order is not a total preorder (saturation or sign bug)")
    return tuple(tuple(sorted(b)) for b in blocks)


def initial_class(a: Automaton, region: ParamRegion, es: ExprSet) -> Class:
    return _Compiled(a, region, es).initial(region)


def firable(cls: Class, ti: int, a: Automaton, region: ParamRegion, es: ExprSet) -> bool:
    return _Compiled(a, region, es).firable(cls, ti)


def discrete_successor(cls: Class, ti: int, a: Automaton, region: ParamRegion, es: ExprSet) -> Class:
    return _Compiled(a, region, es).discrete(cls, ti)


def time_successor(cls: Class, a: Automaton, region: ParamRegion, es: ExprSet) -> Class:
    return _Compiled(a, region, es).time(cls)


def build(a: Automaton, region: ParamRegion, es: ExprSet, cap: int = DEFAULT_CLASS_CAP,
          targets=None) -> ClassAutomaton:
    """Breadth-first construction; stops early once a target state is reached when ``targets`` is given."""
    comp = _Compiled(a, region, es)
    init = comp.initial(region)
    classes, index, edges, parent = [init], {init: 0}, [], {}
    out_of = {}
    for ti, t in enumerate(a.transitions):
        out_of.setdefault(t.source, []).append(ti)
    targets = set(targets) if targets else None
    queue = deque([0])
    if targets and init.state in targets:
        queue.clear()
    while queue:
        i = queue.popleft()
        cls = classes[i]
        succ = [(TIME, comp.time(cls))]
        for ti in out_of.get(cls.state, ()):
            if comp.firable(cls, ti):
                succ.append((ti, comp.discrete(cls, ti)))
        for label, nxt in succ:
            j = index.get(nxt)
            if j is None:
                if len(classes) >= cap:
                    raise ClassGraphError(f"class count exceeds the cap {cap}")
                j = len(classes)
                classes.append(nxt)
                index[nxt] = j
                parent[j] = (i, label)
                queue.append(j)
                if targets and nxt.state in targets:
                    edges.append((i, label, j))
                    queue.clear()
                    break
            edges.append((i, label, j))
    return ClassAutomaton(a, region, es, classes, index, edges, parent)


# concrete membership -------------------------------------------------------

def class_of(config: Config, a: Automaton, region: ParamRegion, es: ExprSet, pi) -> Class:
    """The class whose ordering the valuation realizes at ``pi``."""
    keep = filter_exprs(es, region.sigma)
    v = config.v()
    lvl = a.state_map[config.state].level
    orders = []
    for k in range(1, lvl + 1):
        vals = {i: es.exprs[k][i].evaluate(v, pi) for i in keep[k]}
        orders.append(_blocks_by_key(keep[k], lambda i: vals[i]))
    return Class(config.state, tuple(orders))


def class_constraints(cls: Class, a: Automaton, es: ExprSet, pi):
    """Linear constraints over clock values describing the class at ``pi``."""
    from . import fm
    pi = {p: Fraction(x) for p, x in pi.items()}
    cons = []
    lvl = a.state_map[cls.state].level
    for c in a.clocks:
        if c.level > lvl:
            cons.append(fm.make({c.name: 1}, 0, "="))
    for k in range(1, lvl + 1):
        blocks = cls.orders[k - 1]
        lin = {}
        for b in blocks:
            for i in b:
                e = es.exprs[k][i].instantiate(pi)
                lin[i] = ({n: c.constant_value() for n, c in e.coeffs}, e.const.constant_value())
        for bi, b in enumerate(blocks):
            rep = lin[b[0]]
            for i in b[1:]:
                cons.append(_diff(lin[i], rep, "="))
            if bi + 1 < len(blocks):
                cons.append(_diff(rep, lin[blocks[bi + 1][0]], "<"))
    return cons


def _diff(x, y, op):
    from . import fm
    co = dict(x[0])
    for n, c in y[0].items():
        co[n] = co.get(n, 0) - c
    return fm.make(co, x[1] - y[1], op)


def sample_configs(cls: Class, a: Automaton, es: ExprSet, pi, rng, count: int = 10) -> list:
    from . import fm
    cons = class_constraints(cls, a, es, pi)
    names = [c.name for c in a.clocks]
    out = []
    for _ in range(count):
        env = fm.sample(cons, rng, names)
        if env is None:
            return []
        out.append(Config.of(cls.state, {n: env.get(n, Fraction(0)) for n in names}))
    return out


# text output ---------------------------------------------------------------

def class_parts(cls: Class, es: ExprSet) -> list:
    parts = [cls.state]
    for k, blocks in enumerate(cls.orders, start=1):
        chain = " < ".join(" = ".join(str(es.exprs[k][i]) for i in b) for b in blocks)
        parts.append(f"L{k}: {chain}")
    return parts


def class_text(cls: Class, es: ExprSet) -> str:
    return "; ".join(class_parts(cls, es))


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(ca: ClassAutomaton) -> str:
    a = ca.automaton
    lines = ["digraph classes {", "  node [shape=box, fontname=\"monospace\"];"]
    for i, c in enumerate(ca.classes):
        label = "\\n".join(_dot_escape(x) for x in class_parts(c, ca.exprsets))
        shape = ", peripheries=2" if a.state_map[c.state].final else ""
        lines.append(f'  c{i} [label="{label}"{shape}];')
    for s, lab, d in sorted(ca.edges, key=lambda e: (e[0], str(e[1]), e[2])):
        if lab == TIME:
            lines.append(f"  c{s} -> c{d} [style=dashed];")
        else:
            t = a.transitions[lab]
            name = t.label if t.label is not None else "eps"
            lines.append(f'  c{s} -> c{d} [label="{_dot_escape(name)} (t{lab})"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_classes(ca: ClassAutomaton) -> str:
    lines = []
    for i, c in enumerate(ca.classes):
        lines.append(f"c{i} {class_text(c, ca.exprsets)}")
    for s, lab, d in ca.edges:
        lines.append(f"c{s} -{'time' if lab == TIME else 't' + str(lab)}-> c{d}")
    return "\n".join(lines) + "\n"


def accepted_words(ca: ClassAutomaton, max_len: int) -> set:
    """Label words of paths from the initial class to a class of a final state."""
    a = ca.automaton
    final = {i for i, c in enumerate(ca.classes) if a.state_map[c.state].final}
    adj = ca._adj()

    def closure(S):
        stack, seen = list(S), set(S)
        while stack:
            i = stack.pop()
            for _, lab, d in adj.get(i, []):
                eps = lab == TIME or a.transitions[lab].label is None
                if eps and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)

    words = set()
    layer = {(): closure({0})}
    if layer[()] & final:
        words.add(())
    for _ in range(max_len):
        nxt = {}
        for w, S in layer.items():
            moves = {}
            for i in S:
                for _, lab, d in adj.get(i, []):
                    if lab != TIME and a.transitions[lab].label is not None:
                        moves.setdefault(a.transitions[lab].label, set()).add(d)
            for sym, T in moves.items():
                nxt[w + (sym,)] = closure(T)
        layer = nxt
        for w, S in layer.items():
            if S & final:
                words.add(w)
    return {"".join(w) for w in words}
