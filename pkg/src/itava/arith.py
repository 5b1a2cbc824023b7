"""
Exact arithmetic over parameter polynomials and rational functions.

Rationals are ``fractions.Fraction``.  Polynomials are sparse maps from
monomials to nonzero rational coefficients; a monomial is a tuple of
``(variable, exponent)`` pairs sorted by variable.  Rational functions keep
their denominator as a multiset of normalized polynomial factors, which is
all the saturation procedure ever produces, so no multivariate gcd is needed.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Mapping, Optional, Union

Number = Union[int, Fraction]
Monomial = tuple  # tuple[tuple[str, int], ...]

NEG, ZERO, POS = -1, 0, 1


def var_key(name: str):
    """Natural sort key, so that p2 < p10."""
    return tuple(int(s) if s.isdigit() else s for s in re.split(r"(\d+)", name))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_cmp(a: Monomial, b: Monomial) -> int:
    # graded lexicographic, earlier variables weigh more
    da, db = _mono_degree(a), _mono_degree(b)
    if da != db:
        return -1 if da < db else 1
    for (va, ea), (vb, eb) in zip(a, b):
        if va != vb:
            return 1 if var_key(va) < var_key(vb) else -1
        if ea != eb:
            return -1 if ea < eb else 1
    return 0


mono_key = cmp_to_key(_mono_cmp)


def _mono_divides(a: Monomial, b: Monomial) -> bool:
    eb = dict(b)
    return all(eb.get(v, 0) >= e for v, e in a)


def _mono_div(b: Monomial, a: Monomial) -> Monomial:
    exps = dict(b)
    for v, e in a:
        exps[v] -= e
    return tuple(sorted(((v, e) for v, e in exps.items() if e), key=lambda it: var_key(it[0])))


def _fmt_frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_mono(m: Monomial) -> str:
    return "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)


class Poly:
    """Immutable multivariate polynomial with rational coefficients."""

    __slots__ = ("_terms", "_hash", "_sorted")

    def __init__(self, terms: Optional[Mapping[Monomial, Number]] = None):
        clean = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[m] = c
        self._terms = clean
        self._hash = None
        self._sorted = None

    @classmethod
    def const(cls, c: Number) -> "Poly":
        return cls({(): c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): 1})

    @staticmethod
    def lift(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot lift {type(x).__name__} to Poly")

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return self._terms

    def sorted_terms(self) -> tuple:
        """Terms in ascending graded-lex order (constant first)."""
        if self._sorted is None:
            self._sorted = tuple(sorted(self._terms.items(), key=lambda it: mono_key(it[0])))
        return self._sorted

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def leading(self):
        m, c = self.sorted_terms()[-1]
        return m, c

    def bits(self) -> int:
        return sum(c.numerator.bit_length() + c.denominator.bit_length()
                   for c in self._terms.values())

    def __add__(self, other) -> "Poly":
        other = Poly.lift(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-Poly.lift(other))

    def __rsub__(self, other) -> "Poly":
        return Poly.lift(other) - self

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return Poly({m: c * other for m, c in self._terms.items()})
        other = Poly.lift(other)
        out = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Poly":
        if e < 0:
            raise ValueError("negative exponent")
        out = Poly.const(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def divide_exact(self, d: "Poly") -> Optional["Poly"]:
        """Quotient when ``d`` divides ``self`` exactly, else None."""
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        lm, lc = d.leading()
        rem = self
        quot = {}
        while not rem.is_zero():
            m, c = rem.leading()
            if not _mono_divides(lm, m):
                return None
            qm = _mono_div(m, lm)
            qc = c / lc
            quot[qm] = quot.get(qm, 0) + qc
            rem = rem - d * Poly({qm: qc})
        return Poly(quot)

    def evaluate(self, env: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            t = c
            for v, e in m:
                t *= Fraction(env[v]) ** e
            total += t
        return total

    def normalized(self) -> tuple:
        """Split into ``(scale, monic)`` where the lowest term of ``monic`` has coefficient 1."""
        if self.is_zero():
            raise ValueError("cannot normalize the zero polynomial")
        _, c = self.sorted_terms()[0]
        return c, self * (1 / c)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        return isinstance(other, Poly) and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            neg = c < 0
            a = -c if neg else c
            if m == ():
                body = _fmt_frac(a)
            elif a == 1:
                body = _fmt_mono(m)
            else:
                body = f"{_fmt_frac(a)}*{_fmt_mono(m)}"
            if i == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append((" - " if neg else " + ") + body)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"

    def sort_key(self):
        return str(self)


def poly_sign_known(p: Poly, signs: Mapping[Poly, int]) -> Optional[int]:
    """Sign of ``p`` when it is a constant or a scaled member of ``signs``."""
    if p.is_constant():
        v = p.constant_value()
        return (v > 0) - (v < 0)
    scale, monic = p.normalized()
    s = signs.get(monic)
    if s is None:
        return None
    return s * (1 if scale > 0 else -1)


class RatFun:
    """
    Quotient ``num / prod(den)`` with ``den`` a sorted tuple of normalized
    polynomial factors (repetition allowed).  Factors dividing the numerator
    exactly are cancelled, so two functions over the same factor multiset
    have identical representations.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den: Iterable[Poly] = ()):
        num = Poly.lift(num)
        factors = []
        for f in den:
            if f.is_constant():
                num = num * (1 / f.constant_value())
                continue
            scale, monic = f.normalized()
            num = num * (1 / scale)
            factors.append(monic)
        if num.is_zero():
            factors = []
        kept = []
        for f in factors:
            q = num.divide_exact(f)
            if q is not None:
                num = q
            else:
                kept.append(f)
        self.num = num
        self.den = tuple(sorted(kept, key=Poly.sort_key))
        self._hash = None

    @staticmethod
    def lift(x) -> "RatFun":
        if isinstance(x, RatFun):
            return x
        return RatFun(Poly.lift(x))

    @property
    def den_scalar(self) -> Fraction:
        # rational content lives in the numerator; the scalar is always 1
        return Fraction(1)

    def den_poly(self) -> Poly:
        out = Poly.const(1)
        for f in self.den:
            out = out * f
        return out

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return not self.den and self.num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.num.constant_value()

    def degree(self) -> int:
        return max(self.num.degree(), self.den_poly().degree())

    def bits(self) -> int:
        return self.num.bits() + sum(f.bits() for f in self.den)

    def _common(self, other: "RatFun"):
        mine, theirs = list(self.den), list(other.den)
        lcm = list(mine)
        extra_self = []
        for f in theirs:
            if f in mine:
                mine.remove(f)
            else:
                lcm.append(f)
                extra_self.append(f)
        extra_other = mine
        a = self.num
        for f in extra_self:
            a = a * f
        b = other.num
        for f in extra_other:
            b = b * f
        return a, b, lcm

    def __add__(self, other) -> "RatFun":
        other = RatFun.lift(other)
        a, b, den = self._common(other)
        return RatFun(a + b, den)

    __radd__ = __add__

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __sub__(self, other) -> "RatFun":
        return self + (-RatFun.lift(other))

    def __rsub__(self, other) -> "RatFun":
        return RatFun.lift(other) - self

    def __mul__(self, other) -> "RatFun":
        if isinstance(other, (int, Fraction)):
            return RatFun(self.num * other, self.den)
        other = RatFun.lift(other)
        return RatFun(self.num * other.num, self.den + other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFun":
        """Division by a function whose numerator is a constant or a scaled single factor."""
        other = RatFun.lift(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero function")
        num = self.num
        for f in other.den:
            num = num * f
        if other.num.is_constant():
            return RatFun(num * (1 / other.num.constant_value()), self.den)
        return RatFun(num, self.den + (other.num,))

    def __rtruediv__(self, other) -> "RatFun":
        return RatFun.lift(other) / self

    def evaluate(self, env: Mapping[str, Fraction]) -> Fraction:
        d = Fraction(1)
        for f in self.den:
            d *= f.evaluate(env)
        if d == 0:
            raise ZeroDivisionError(f"denominator of {self} vanishes")
        return self.num.evaluate(env) / d

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Poly)):
            other = RatFun.lift(other)
        if not isinstance(other, RatFun):
            return NotImplemented
        if self.den == other.den:
            return self.num == other.num
        return ratfun_equal(self, other)

    def __hash__(self) -> int:
        # only consistent with == for canonical forms; ExprSet uses its own keys
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __str__(self) -> str:
        if not self.den:
            return str(self.num)
        n = str(self.num)
        if len(self.num.terms) > 1:
            n = f"({n})"
        d = "*".join(f"({f})" if len(f.terms) > 1 else str(f) for f in self.den)
        if len(self.den) > 1:
            d = f"({d})"
        return f"{n}/{d}"

    def __repr__(self) -> str:
        return f"RatFun({str(self)!r})"


def ratfun_equal(f: RatFun, g: RatFun) -> bool:
    """Cross-multiplication test: num(f)*den(g) == num(g)*den(f)."""
    return f.num * g.den_poly() == g.num * f.den_poly()


def sign_of(f: RatFun, sigma: Mapping[Poly, int]) -> Optional[int]:
    """
    Sign of ``f`` forced by the sign assignment ``sigma`` (keys are normalized
    polynomials), or None when the numerator is neither constant nor a scaled
    member of ``sigma``.
    """
    dsign = 1
    for fac in f.den:
        s = sigma.get(fac)
        if s is None:
            return None
        if s == ZERO:
            raise ZeroDivisionError(f"denominator factor {fac} is zero on the region")
        dsign *= s
    ns = poly_sign_known(f.num, sigma)
    if ns is None:
        return None
    return ns * dsign


def eval_ratfun(f: RatFun, pi: Mapping[str, Fraction]) -> Fraction:
    return f.evaluate(pi)


def ratfun_equal_sampled(f: RatFun, g: RatFun, points: Iterable[Mapping[str, Fraction]]) -> bool:
    """Equality at sample points, skipping poles; used by property tests."""
    for pt in points:
        try:
            if f.evaluate(pt) != g.evaluate(pt):
                return False
        except ZeroDivisionError:
            continue
    return True
