"""
Satisfiability of polynomial constraint systems over the parameters.

Two back ends: an external SMT-LIB solver driven through one interactive
process (nonlinear real arithmetic), and a built-in sampler that only ever proves
satisfiability.
"""

from __future__ import annotations

import os
import random
import shutil
import subprocess
import zlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .arith import Poly, var_key
from .model import compare

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"
ENV_VAR = "ITAVA_SMT_SOLVER"


class SolverError(RuntimeError):
    """The solver could not be launched or answered something unreadable."""


@dataclass(frozen=True)
class CheckResult:
    status: str
    witness: Optional[dict] = None

    @property
    def sat(self) -> bool:
        return self.status == SAT


# SMT-LIB text ----------------------------------------------------------------

def smt_rational(c: Fraction) -> str:
    c = Fraction(c)
    mag = abs(c)
    body = f"{mag.numerator}.0" if mag.denominator == 1 else f"(/ {mag.numerator}.0 {mag.denominator}.0)"
    return f"(- {body})" if c < 0 else body


def smt_poly(p: Poly) -> str:
    if p.is_zero():
        return "0.0"
    terms = []
    for m, c in p.sorted_terms():
        factors = [v for v, e in m for _ in range(e)]
        if not factors:
            terms.append(smt_rational(c))
        elif c == 1:
            terms.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
        else:
            terms.append(f"(* {smt_rational(c)} {' '.join(factors)})")
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


_ATOM_TEXT: dict = {}


def smt_atom(p: Poly, op: str) -> str:
    key = (p, op)
    text = _ATOM_TEXT.get(key)
    if text is None:
        o = {"<": "<", "<=": "<=", "=": "=", ">=": ">=", ">": ">"}[op]
        text = f"({o} {smt_poly(p)} 0.0)"
        if len(_ATOM_TEXT) < 200_000:
            _ATOM_TEXT[key] = text
    return text


def _tokens(text: str):
    out, cur = [], ""
    for ch in text:
        if ch in "()":
            if cur:
                out.append(cur)
                cur = ""
            out.append(ch)
        elif ch.isspace():
            if cur:
                out.append(cur)
                cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


def parse_sexpr(text: str):
    toks = _tokens(text)
    pos = 0

    def walk():
        nonlocal pos
        if pos >= len(toks):
            raise SolverError(f"truncated solver output: {text!r}")
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while pos < len(toks) and toks[pos] != ")":
                items.append(walk())
            if pos >= len(toks):
                raise SolverError(f"unbalanced solver output: {text!r}")
            pos += 1
            return items
        if t == ")":
            raise SolverError(f"unexpected ')' in solver output: {text!r}")
        return t

    return walk()


class Irrational(Exception):
    pass


def sexpr_value(e) -> Fraction:
    """Exact value of a numeral term; raises :class:`Irrational` for algebraic numbers."""
    if isinstance(e, str):
        s = e.rstrip("?")
        try:
            return Fraction(s)
        except ValueError:
            raise SolverError(f"unreadable numeral {e!r}")
    head = e[0] if e else None
    if head == "-" and len(e) == 2:
        return -sexpr_value(e[1])
    if head == "-" and len(e) == 3:
        return sexpr_value(e[1]) - sexpr_value(e[2])
    if head == "/" and len(e) == 3:
        return sexpr_value(e[1]) / sexpr_value(e[2])
    if head == "+":
        return sum((sexpr_value(x) for x in e[1:]), Fraction(0))
    if head == "root-obj":
        raise Irrational(e)
    raise SolverError(f"unsupported value term {e!r}")


# constraint evaluation -------------------------------------------------------

def atoms_hold(atoms, env: Mapping[str, Fraction]) -> bool:
    return all(compare(p.evaluate(env), 0, op) for p, op in atoms)


def formula_holds(f, env) -> bool:
    if f is None:
        return True
    if f.kind == "atom":
        return compare(f.atom.poly.evaluate(env), 0, f.atom.op)
    if f.kind == "and":
        return all(formula_holds(c, env) for c in f.children)
    if f.kind == "or":
        return any(formula_holds(c, env) for c in f.children)
    raise SolverError("quantified scopes need an external solver")


def formula_smt(f) -> str:
    if f.kind == "atom":
        return smt_atom(f.atom.poly, f.atom.op)
    if f.kind == "raw":
        return f.raw
    if not f.children:
        return "true" if f.kind == "and" else "false"
    return f"({f.kind} {' '.join(formula_smt(c) for c in f.children)})"


# back ends -------------------------------------------------------------------

class SmtSolver:
    """One interactive solver process; every query is wrapped in push/pop."""

    def __init__(self, path: str, params, timeout: float = 20.0):
        self.path = path
        self.params = tuple(sorted(params, key=var_key))
        self.timeout = timeout
        self.queries = 0
        self.proc = None
        self._start()

    def _args(self):
        base = os.path.basename(self.path)
        if base.startswith("z3"):
            return [self.path, "-in", "-smt2"]
        if base.startswith("cvc"):
            return [self.path, "--incremental", "--produce-models", "--lang=smt2"]
        if base.startswith("yices"):
            return [self.path, "--incremental"]
        return [self.path]

    def _start(self):
        try:
            self.proc = subprocess.Popen(self._args(), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=subprocess.STDOUT, text=True, bufsize=1)
        except OSError as exc:
            raise SolverError(f"cannot launch solver {self.path}: {exc}") from exc
        self._send("(set-option :print-success false)")
        self._send("(set-option :produce-models true)")
        if os.path.basename(self.path).startswith("z3") and self.timeout:
            self._send(f"(set-option :timeout {int(self.timeout * 1000)})")
        if not os.path.basename(self.path).startswith("z3"):
            # quantified scopes need NRA; z3 picks its procedure per query instead
            self._send("(set-logic NRA)")
        for p in self.params:
            self._send(f"(declare-fun {p} () Real)")

    def _send(self, line: str):
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver {self.path} terminated: {exc}") from exc

    def _read_sexpr(self) -> str:
        buf, depth, started = "", 0, False
        while True:
            line = self.proc.stdout.readline()
            if not line:
                raise SolverError(f"solver {self.path} closed its output")
            buf += line
            for ch in line:
                if ch == "(":
                    depth += 1
                    started = True
                elif ch == ")":
                    depth -= 1
            if started and depth <= 0:
                return buf.strip()
            if not started and buf.strip():
                return buf.strip()

    def _read_status(self) -> str:
        line = self.proc.stdout.readline()
        if not line:
            raise SolverError(f"solver {self.path} closed its output")
        s = line.strip()
        if s in (SAT, UNSAT, UNKNOWN):
            return s
        if s.startswith("(error"):
            raise SolverError(f"solver error: {s}")
        raise SolverError(f"malformed solver answer {s!r}")

    def check(self, atoms, scope=None) -> CheckResult:
        self.queries += 1
        lines = ["(push 1)"]
        lines.extend(f"(assert {smt_atom(p, op)})" for p, op in atoms)
        if scope is not None:
            lines.append(f"(assert {formula_smt(scope)})")
        lines.append(self._check_command(scope))
        self._send("\n".join(lines))
        try:
            status = self._read_status()
            if status != SAT:
                return CheckResult(status)
            return CheckResult(SAT, self._witness(atoms, scope))
        finally:
            self._send("(pop 1)")

    def _check_command(self, scope) -> str:
        # inside push/pop z3 would otherwise use its incremental core, which
        # is much weaker on nonlinear problems than the nlsat procedure
        if os.path.basename(self.path).startswith("z3") and (scope is None or scope.kind != "raw"):
            return "(check-sat-using qfnra-nlsat)"
        return "(check-sat)"

    def _values(self):
        if not self.params:
            return []
        self._send(f"(get-value ({' '.join(self.params)}))")
        out = parse_sexpr(self._read_sexpr())
        if isinstance(out, str) or (out and out[0] == "error"):
            raise SolverError(f"solver error: {out}")
        return out

    def _witness(self, atoms, scope) -> Optional[dict]:
        env, irrational = {}, False
        for name, val in self._values():
            try:
                env[name] = sexpr_value(val)
            except Irrational:
                irrational = True
        if not irrational:
            return env if self._valid(env, atoms, scope) else None
        if any(op in ("=", "<=", ">=") for _, op in atoms):
            return None  # algebraic point on an equality: no rational witness
        # strict system: the solution set is open, so decimal approximations
        # of increasing precision eventually land inside it
        for prec in (10, 20, 40, 80):
            self._send("(set-option :pp.decimal true)")
            self._send(f"(set-option :pp.decimal_precision {prec})")
            vals = self._values()
            self._send("(set-option :pp.decimal false)")
            cand = {name: sexpr_value(v) for name, v in vals}
            if self._valid(cand, atoms, scope):
                return cand
        return None

    @staticmethod
    def _valid(env, atoms, scope) -> bool:
        try:
            return atoms_hold(atoms, env) and (scope is None or scope.kind == "raw" or formula_holds(scope, env))
        except ZeroDivisionError:
            return False

    def close(self):
        if self.proc is not None and self.proc.poll() is None:
            try:
                self._send("(exit)")
                self.proc.wait(timeout=5)
            except (SolverError, subprocess.TimeoutExpired):
                self.proc.kill()
        self.proc = None

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


_GRID = [Fraction(0), Fraction(1), Fraction(-1), Fraction(2), Fraction(-2), Fraction(1, 2), Fraction(-1, 2),
         Fraction(3), Fraction(-3), Fraction(5), Fraction(-5), Fraction(1, 3), Fraction(-1, 3),
         Fraction(4), Fraction(-4), Fraction(10), Fraction(-10), Fraction(3, 2), Fraction(-3, 2)]


def _partial(p: Poly, env: Mapping[str, Fraction]) -> Poly:
    out = {}
    for m, c in p.terms.items():
        keep = []
        for v, e in m:
            if v in env:
                c = c * Fraction(env[v]) ** e
            else:
                keep.append((v, e))
        key = tuple(keep)
        out[key] = out.get(key, 0) + c
    return Poly(out)


class SamplingSolver:
    """Exact evaluation on randomized rational points; never answers unsat."""

    def __init__(self, params, seed: int = 0, tries: int = 400):
        self.params = tuple(sorted(params, key=var_key))
        self.seed = seed
        self.tries = tries
        self.queries = 0

    def check(self, atoms, scope=None) -> CheckResult:
        self.queries += 1
        if scope is not None and scope.kind == "raw":
            return CheckResult(UNKNOWN)
        atoms = list(atoms)
        if scope is not None:
            # one randomly chosen disjunct of the scope per try
            disjuncts = scope.disjuncts()
        else:
            disjuncts = [[]]
        text = ";".join(f"{p} {op}" for p, op in atoms)
        rng = random.Random(zlib.crc32(f"{self.seed}|{text}".encode()))
        for i in range(self.tries):
            extra = disjuncts[i % len(disjuncts)]
            system = atoms + [(a.poly, a.op) for a in extra]
            env = self._attempt(system, rng)
            if env is not None and atoms_hold(system, env):
                return CheckResult(SAT, env)
        return CheckResult(UNKNOWN)

    def _attempt(self, atoms, rng) -> Optional[dict]:
        env = {}
        todo = list(self.params)
        while todo:
            forced = None
            for p, op in atoms:
                if op != "=":
                    continue
                q = _partial(p, env)
                free = q.variables()
                if len(free) == 1 and q.degree() == 1:
                    (v,) = free
                    a = q.terms.get(((v, 1),), Fraction(0))
                    forced = (v, -q.terms.get((), Fraction(0)) / a)
                    break
            if forced is not None and forced[0] in todo:
                v, val = forced
            else:
                v = rng.choice(todo)
                if rng.random() < 0.6:
                    val = rng.choice(_GRID)
                else:
                    val = Fraction(rng.randint(-60, 60), rng.randint(1, 12))
            env[v] = val
            todo.remove(v)
        return env

    def close(self):
        pass


def resolve_solver_path(explicit: Optional[str] = None) -> Optional[str]:
    path = explicit or os.environ.get(ENV_VAR) or None
    if path is None:
        return None
    found = shutil.which(path) or (path if os.path.exists(path) else None)
    if found is None:
        raise SolverError(f"solver {path} not found")
    return found


class Oracle:
    """Memoizing front for either back end."""

    def __init__(self, params, solver_path: Optional[str] = None, seed: int = 0):
        self.params = tuple(sorted(params, key=var_key))
        self.backend_name = "smt" if solver_path else "sampling"
        self.backend = SmtSolver(solver_path, self.params) if solver_path else SamplingSolver(self.params, seed)
        self.cache: dict = {}
        self.hits = 0
        self.unknowns = 0

    @property
    def complete(self) -> bool:
        return self.backend_name == "smt"

    def check(self, atoms, scope=None) -> CheckResult:
        atoms = _simplify(atoms)
        if atoms is None:
            return CheckResult(UNSAT)
        if not self.params or (not atoms and scope is None):
            if scope is None or scope.kind != "raw":
                env = {p: Fraction(0) for p in self.params}
                if scope is None or formula_holds(scope, env):
                    return CheckResult(SAT, env)
        key = (frozenset(atoms), str(scope) if scope is not None else None)
        if key in self.cache:
            self.hits += 1
            return self.cache[key]
        res = self.backend.check(atoms, scope)
        if res.status == UNKNOWN:
            self.unknowns += 1
        self.cache[key] = res
        return res

    def stats(self) -> dict:
        return {"backend": self.backend_name, "queries": self.backend.queries,
                "cache_hits": self.hits, "unknown": self.unknowns}

    def close(self):
        self.backend.close()


def _simplify(atoms) -> Optional[list]:
    """Drop constant atoms that hold; None when one of them fails."""
    out, seen = [], set()
    for p, op in atoms:
        if p.is_constant():
            if not compare(p.constant_value(), 0, op):
                return None
            continue
        key = (p, op)
        if key not in seen:
            seen.add(key)
            out.append((p, op))
    return out
