"""
Textual ``.pita`` model format.

Example::

    pita A2 {
      params p1 p2;
      levels 2;
      level 1 { main x1; }
      level 2 { main x2; }
      state q1 level 1 init;
      state q2 level 2 final;
      trans q1 -> q2 on a when x1 < p1;
      trans q2 -> q2 on b when x1 + p2*x2 = 2 do x2 := (p1 - 4*p2^2)*x1 + p2;
    }

Numbers are integers, fractions ``a/b`` or finite decimals, all converted to
exact rationals.  ``^`` is only allowed on parameter expressions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .arith import Poly
from .model import (Automaton, Clock, ClockExpr, DiffAtom, LinearAtom, State,
                    Transition, Violation, _sorted_update, reset_implicit, validate)
from .regions import Formula, PolyAtom

KEYWORDS = {"pita", "ita", "params", "levels", "level", "main", "aux", "state", "act",
            "init", "final", "lazy", "urgent", "delayed", "trans", "on", "when", "do",
            "and", "or", "true", "eps"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>(\#|//)[^\n]*)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>:=|->|<=|>=|==|[<>=+\-*/^(){};,])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            tok = m.group()
            if kind == "op" and tok == "==":
                tok = "="
            out.append(Token(kind, tok, line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str, params=()):
        self.toks = tokenize(text)
        self.i = 0
        self.params = set(params)

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> Optional[Token]:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return t

    def name(self) -> Token:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.error(f"expected an identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or "." in t.text:
            self.error("expected an integer")
        self.i += 1
        return int(t.text)

    # expressions are parsed into polynomials over clocks and parameters
    def expr(self) -> Poly:
        e = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok.text
            self.i += 1
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self) -> Poly:
        e = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok
            self.i += 1
            r = self.unary()
            if op.text == "*":
                e = e * r
            else:
                if not r.is_constant() or r.is_zero():
                    self.error("division is only allowed by a nonzero number", op)
                e = e * (1 / r.constant_value())
        return e

    def unary(self) -> Poly:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.tok.text == "^" and self.tok.kind == "op":
            caret = self.tok
            self.i += 1
            e = self.integer()
            if base.variables() - self.params:
                self.error("exponent on non-parameter", caret)
            return base ** e
        return base

    def atom(self) -> Poly:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Poly.const(Fraction(t.text))
        if t.kind == "name" and t.text not in KEYWORDS:
            self.i += 1
            return Poly.var(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected {t.text or 'end of input'!r} in expression")


def poly_to_clockexpr(p: Poly, clocks: set, where: Optional[Token] = None) -> ClockExpr:
    """Split a polynomial that is linear in clocks into a :class:`ClockExpr`."""
    coeffs, const = {}, {}
    for m, c in p.terms.items():
        cl = [(v, e) for v, e in m if v in clocks]
        rest = tuple((v, e) for v, e in m if v not in clocks)
        if not cl:
            const[rest] = c
        elif len(cl) == 1 and cl[0][1] == 1:
            coeffs.setdefault(cl[0][0], {})[rest] = c
        else:
            raise ParseError("expression is not linear in clocks",
                             where.line if where else 0, where.col if where else 0)
    return ClockExpr({n: Poly(d) for n, d in coeffs.items()}, Poly(const))


@dataclass
class ModelDocument:
    source: str
    automaton: Automaton
    spans: dict = field(default_factory=dict)

    def describe(self, v: Violation) -> str:
        pos = self.spans.get(v.where.split(" (")[0])
        return f"line {pos[0]}: {v}" if pos else str(v)


def parse_document(text: str) -> ModelDocument:
    p = _Parser(text)
    spans = {}
    kw = p.tok
    if kw.text not in ("pita", "ita"):
        p.error("model must start with 'pita' or 'ita'")
    p.i += 1
    name = "A"
    if p.tok.kind == "name" and p.tok.text not in KEYWORDS:
        name = p.name().text
    p.expect("{")
    params, levels, clocks, states, raw = [], None, [], [], []
    while not p.accept("}"):
        t = p.tok
        if p.accept("params"):
            while p.tok.kind == "name" and p.tok.text not in KEYWORDS:
                params.append(p.name().text)
                p.accept(",")
            p.expect(";")
            p.params = set(params)
        elif p.accept("levels"):
            levels = p.integer()
            p.expect(";")
        elif p.accept("level"):
            lvl = p.integer()
            p.expect("{")
            while not p.accept("}"):
                if p.accept("main"):
                    clocks.append(Clock(p.name().text, lvl, True))
                    p.expect(";")
                elif p.accept("aux"):
                    clocks.append(Clock(p.name().text, lvl, False))
                    while p.accept(","):
                        clocks.append(Clock(p.name().text, lvl, False))
                    while p.tok.kind == "name" and p.tok.text not in KEYWORDS:
                        clocks.append(Clock(p.name().text, lvl, False))
                    p.expect(";")
                else:
                    p.error("expected 'main' or 'aux'")
        elif p.accept("state"):
            sname = p.name()
            p.expect("level")
            lvl = p.integer()
            act, init, final, policy = None, False, False, "lazy"
            while not p.accept(";"):
                if p.accept("act"):
                    act = p.name().text
                elif p.accept("init"):
                    init = True
                elif p.accept("final"):
                    final = True
                elif p.tok.text in ("lazy", "urgent", "delayed"):
                    policy = p.tok.text
                    p.i += 1
                else:
                    p.error(f"unexpected {p.tok.text!r} in state declaration")
            spans[f"state {sname.text}"] = (sname.line, sname.col)
            states.append((sname.text, lvl, act, init, final, policy, sname))
        elif p.accept("trans"):
            src = p.name().text
            p.expect("->")
            dst = p.name().text
            label = None
            if p.accept("on"):
                if p.accept("eps") is None:
                    label = p.name().text
            guards = []
            if p.accept("when"):
                if not p.accept("true"):
                    guards.append(_chain(p))
                    while p.accept("and"):
                        guards.append(_chain(p))
            assigns = []
            if p.accept("do"):
                assigns.append(_assign(p))
                while p.accept(","):
                    assigns.append(_assign(p))
            p.expect(";")
            spans[f"transition {len(raw)}"] = (t.line, t.col)
            raw.append((src, dst, label, guards, assigns, t))
        else:
            p.error(f"unexpected {t.text or 'end of input'!r}")
    if p.tok.kind != "eof":
        p.error("trailing input after model")
    if levels is None:
        levels = max([c.level for c in clocks] + [1])
    clock_names = {c.name for c in clocks}
    clock_level = {c.name: c.level for c in clocks}
    main_of = {c.level: c.name for c in clocks if c.main}
    st = []
    for sname, lvl, act, init, final, policy, tok in states:
        if act is None:
            act = main_of.get(lvl)
            if act is None:
                raise ParseError(f"level {lvl} has no main clock", tok.line, tok.col)
        st.append(State(sname, lvl, act, init, final, policy))
    state_level = {s.name: s.level for s in st}
    transitions = []
    for src, dst, label, guards, assigns, tok in raw:
        atoms = []
        for chain in guards:
            for lhs, op, rhs, optok in chain:
                e = poly_to_clockexpr(lhs - rhs, clock_names, optok)
                atoms.append(_classify_atom(e, op, state_level.get(src), clock_level))
        upd = {}
        for z, rhs, ztok in assigns:
            if z in upd:
                raise ParseError(f"clock {z} assigned twice", ztok.line, ztok.col)
            upd[z] = poly_to_clockexpr(rhs, clock_names, ztok)
        transitions.append(Transition(src, dst, tuple(atoms), label, _sorted_update(upd)))
    a = Automaton(tuple(params), levels, tuple(clocks), tuple(st), tuple(transitions), name)
    if all(s in state_level for t in transitions for s in (t.source, t.target)):
        a = reset_implicit(a)
    return ModelDocument(text, a, spans)


def _chain(p: _Parser) -> list:
    left = p.expr()
    out = []
    while p.tok.text in ("<", "<=", "=", ">=", ">") and p.tok.kind == "op":
        optok = p.tok
        p.i += 1
        right = p.expr()
        out.append((left, optok.text, right, optok))
        left = right
    if not out:
        p.error("expected a comparison operator")
    return out


def _assign(p: _Parser):
    z = p.name()
    p.expect(":=")
    return z.text, p.expr(), z


def _classify_atom(e: ClockExpr, op: str, level, clock_level: dict):
    if level is not None and e.const.is_zero() and len(e.coeffs) == 2:
        (n1, c1), (n2, c2) = e.coeffs
        if (clock_level.get(n1) == level == clock_level.get(n2)
                and c1.is_constant() and c2.is_constant()
                and {c1.constant_value(), c2.constant_value()} == {1, -1}):
            pos, neg = (n1, n2) if c1.constant_value() == 1 else (n2, n1)
            return DiffAtom(pos, neg, op)
    return LinearAtom(e, op)


def parse_model(text: str) -> Automaton:
    """Parse and validate; raises :class:`ModelError` listing every problem."""
    doc = parse_document(text)
    problems = validate(doc.automaton)
    problems = [v for v in problems if "policy annotation" not in v.rule]
    if problems:
        raise ModelError([doc.describe(v) for v in problems])
    return doc.automaton


class ModelError(Exception):
    def __init__(self, violations: list):
        super().__init__("; ".join(violations))
        self.violations = violations


def load_model(path) -> Automaton:
    with open(path) as fh:
        return parse_model(fh.read())


def print_model(a: Automaton) -> str:
    lines = [f"pita {a.name} {{"]
    if a.params:
        lines.append(f"  params {' '.join(a.params)};")
    lines.append(f"  levels {a.levels};")
    for lvl in range(1, a.levels + 1):
        cs = [c for c in a.clocks if c.level == lvl]
        body = [f"main {c.name};" for c in cs if c.main]
        aux = [c.name for c in cs if not c.main]
        if aux:
            body.append(f"aux {', '.join(aux)};")
        lines.append(f"  level {lvl} {{ {' '.join(body)} }}")
    for s in a.states:
        flags = []
        if s.act != a.main_clock(s.level):
            flags.append(f"act {s.act}")
        if s.initial:
            flags.append("init")
        if s.final:
            flags.append("final")
        if s.policy != "lazy":
            flags.append(s.policy)
        lines.append(f"  state {s.name} level {s.level}{''.join(' ' + f for f in flags)};")
    for t in a.transitions:
        parts = [f"  trans {t.source} -> {t.target}"]
        if t.label is not None:
            parts.append(f"on {t.label}")
        if t.guard:
            parts.append("when " + " and ".join(_atom_text(g) for g in t.guard))
        if t.update:
            parts.append("do " + ", ".join(f"{z} := {_expr_text(e)}" for z, e in t.update))
        lines.append(" ".join(parts) + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _expr_text(e: ClockExpr) -> str:
    if any(c.den for c in e.ratfuns()):
        raise ValueError("model expressions have polynomial coefficients only")
    return str(e)


def _atom_text(g) -> str:
    if isinstance(g, DiffAtom):
        return f"{g.left} - {g.right} {g.op} 0"
    return f"{_expr_text(g.expr)} {g.op} 0"


# scope and valuation files -------------------------------------------------

def parse_scope(text: str, params) -> Formula:
    """Guard syntax restricted to parameters, with ``and``/``or`` and parentheses.

    A scope whose first non-blank character is ``(`` followed by an SMT-LIB
    keyword such as ``exists`` is kept verbatim for the external solver.
    """
    stripped = text.strip()
    if re.match(r"^\(\s*(exists|forall|and|or|not|assert)\b", stripped):
        return Formula("raw", raw=stripped)
    p = _Parser(text, params)
    f = _scope_or(p, set(params))
    if p.tok.kind != "eof":
        p.error("trailing input in scope")
    return f


def _scope_or(p, params) -> Formula:
    items = [_scope_and(p, params)]
    while p.accept("or"):
        items.append(_scope_and(p, params))
    return items[0] if len(items) == 1 else Formula("or", children=tuple(items))


def _scope_and(p, params) -> Formula:
    items = [_scope_base(p, params)]
    while p.accept("and") or p.accept(";"):
        if p.tok.kind == "eof":
            break
        items.append(_scope_base(p, params))
    return items[0] if len(items) == 1 else Formula("and", children=tuple(items))


def _scope_base(p, params) -> Formula:
    if p.accept("true"):
        return Formula("and")
    save = p.i
    if p.tok.text == "(":
        # parenthesized sub-formula or a parenthesized polynomial
        try:
            p.i += 1
            f = _scope_or(p, params)
            p.expect(")")
            if p.tok.text not in ("<", "<=", "=", ">=", ">", "+", "-", "*", "/", "^"):
                return f
        except ParseError:
            pass
        p.i = save
    chain = _chain(p)
    atoms = []
    for lhs, op, rhs, tok in chain:
        diff = lhs - rhs
        bad = diff.variables() - params
        if bad:
            raise ParseError(f"scope mentions non-parameters {sorted(bad)}", tok.line, tok.col)
        atoms.append(Formula("atom", PolyAtom(diff, op)))
    return atoms[0] if len(atoms) == 1 else Formula("and", children=tuple(atoms))


def parse_valuation(text: str) -> dict:
    """``p1 = 5; p2 = -1`` (newlines or semicolons separate entries)."""
    out = {}
    for part in re.split(r"[;\n,]", text):
        part = part.split("#")[0].strip()
        if not part:
            continue
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_']*)\s*(?::=|=)\s*(.+)", part)
        if not m:
            raise ParseError(f"cannot read valuation entry {part!r}")
        p = _Parser(m.group(2))
        v = p.expr()
        if not v.is_constant():
            raise ParseError(f"value of {m.group(1)} is not a number")
        out[m.group(1)] = v.constant_value()
    return out
