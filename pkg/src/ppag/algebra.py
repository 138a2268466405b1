"""Exact multivariate polynomials, rational functions, valuations and boxes.

Polynomials have rational coefficients and are kept in a canonical form:
no zero coefficients, monomials stored as sorted ``(name, exponent)``
tuples.  Terms are ordered graded-lexicographically (higher total degree
first, ties broken lexicographically with parameters in alphabetical
order), which fixes the textual rendering.

Valuations are plain mappings from parameter names to ``Fraction``.
"""

from __future__ import annotations

import itertools
import random
import re
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping, Sequence

from .errors import MissingParameter, ParseError

Monomial = tuple  # tuple[tuple[str, int], ...], sorted by name
Valuation = Mapping[str, Fraction]

ONE_MONOMIAL: Monomial = ()


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted; use Fraction or a string")
    return Fraction(x)


def make_valuation(values: Mapping | None = None, **kwargs) -> dict[str, Fraction]:
    out = {k: as_fraction(v) for k, v in (values or {}).items()}
    out.update({k: as_fraction(v) for k, v in kwargs.items()})
    return out


def format_valuation(v: Valuation) -> str:
    return ", ".join(f"{k}={v[k]}" for k in sorted(v)) or "(none)"


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for name, e in m2:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


def _mono_divides(d: Monomial, m: Monomial) -> bool:
    exps = dict(m)
    return all(exps.get(name, 0) >= e for name, e in d)


def _mono_div(m: Monomial, d: Monomial) -> Monomial:
    exps = dict(m)
    for name, e in d:
        exps[name] -= e
    return tuple(sorted((k, e) for k, e in exps.items() if e))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _order_key(names: Sequence[str]) -> Callable[[Monomial], tuple]:
    """Sort key realising graded lex order over the given parameter list."""

    def key(m: Monomial):
        exps = dict(m)
        return (_mono_degree(m), tuple(exps.get(n, 0) for n in names))

    return key


def _mono_str(m: Monomial) -> str:
    return "*".join(name if e == 1 else f"{name}^{e}" for name, e in m)


class Polynomial:
    """Sparse polynomial with ``Fraction`` coefficients; immutable."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            c = as_fraction(coeff)
            if c != 0:
                key = tuple(sorted((n, e) for n, e in mono if e))
                c = clean.get(key, 0) + c
                if c == 0:
                    clean.pop(key, None)
                else:
                    clean[key] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({ONE_MONOMIAL: c})

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({((name, 1),): 1})

    @classmethod
    def coerce(cls, x) -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        return cls.const(x)

    # inspection

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    @property
    def params(self) -> frozenset[str]:
        return frozenset(n for m in self._terms for n, _ in m)

    @property
    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get(ONE_MONOMIAL, Fraction(0))

    def sorted_terms(self, names: Sequence[str] | None = None) -> list[tuple[Monomial, Fraction]]:
        names = sorted(self.params) if names is None else names
        key = _order_key(names)
        return sorted(self._terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, names: Sequence[str] | None = None) -> tuple[Monomial, Fraction]:
        return self.sorted_terms(names)[0]

    # arithmetic

    def __add__(self, other):
        other = Polynomial.coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Polynomial.coerce(other))

    def __rsub__(self, other):
        return Polynomial.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = as_fraction(other)
            return Polynomial({m: c * v for m, v in self._terms.items()})
        terms: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial(terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def exact_div(self, divisor: "Polynomial") -> "Polynomial":
        """Quotient of an exact division; raises ``ValueError`` otherwise."""
        divisor = Polynomial.coerce(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if divisor.is_constant():
            return self * (1 / divisor.constant_value())
        names = sorted(self.params | divisor.params)
        key = _order_key(names)
        lead_m, lead_c = max(divisor._terms.items(), key=lambda t: key(t[0]))
        rest = dict(self._terms)
        quotient: dict[Monomial, Fraction] = {}
        while rest:
            m, c = max(rest.items(), key=lambda t: key(t[0]))
            if not _mono_divides(lead_m, m):
                raise ValueError(f"{divisor} does not divide {self}")
            qm = _mono_div(m, lead_m)
            qc = c / lead_c
            quotient[qm] = quotient.get(qm, 0) + qc
            for dm, dc in divisor._terms.items():
                pm = _mono_mul(qm, dm)
                v = rest.get(pm, 0) - qc * dc
                if v == 0:
                    rest.pop(pm, None)
                else:
                    rest[pm] = v
        return Polynomial(quotient)

    # evaluation and calculus

    def evaluate(self, v: Valuation) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for name, e in m:
                if name not in v:
                    raise MissingParameter(f"parameter {name!r} is not assigned")
                term *= as_fraction(v[name]) ** e
            total += term
        return total

    def derivative(self, name: str) -> "Polynomial":
        terms: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            exps = dict(m)
            e = exps.get(name, 0)
            if e == 0:
                continue
            exps[name] = e - 1
            key = tuple(sorted((n, x) for n, x in exps.items() if x))
            terms[key] = terms.get(key, 0) + c * e
        return Polynomial(terms)

    # comparison and rendering

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            if not m:
                s = str(c)
            elif c == 1:
                s = _mono_str(m)
            elif c == -1:
                s = "-" + _mono_str(m)
            else:
                s = f"{c}*{_mono_str(m)}"
            if parts:
                parts.append(f"- {s[1:]}" if s.startswith("-") else f"+ {s}")
            else:
                parts.append(s)
        return " ".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


ZERO = Polynomial()
ONE = Polynomial.const(1)


# named operations used by the CLI and tests


def poly_eval(f: Polynomial, v: Valuation) -> Fraction:
    return f.evaluate(v)


def poly_arith(op: str, f: Polynomial, g) -> Polynomial:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    if op == "scale":
        return f * as_fraction(g)
    raise ValueError(f"unknown operation {op!r}")


def partial_derivative(f: Polynomial, name: str) -> Polynomial:
    return f.derivative(name)


# parsing

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str, source: str, line: int) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, ident, sym = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif ident is not None:
            tokens.append(("id", ident))
        elif sym in "+-*/^()":
            tokens.append(("op", sym))
        else:
            raise ParseError(source, line, "polynomial token", sym)
        pos = m.end()
    return tokens


class _PolyParser:
    def __init__(self, text, params, source, line):
        self.tokens = _tokenize(text, source, line)
        self.pos = 0
        self.params = params
        self.source = source
        self.line = line

    def fail(self, expected):
        found = self.tokens[self.pos][1] if self.pos < len(self.tokens) else "end of input"
        raise ParseError(self.source, self.line, expected, found)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> Polynomial:
        if not self.tokens:
            self.fail("polynomial")
        result = self.expr()
        if self.pos != len(self.tokens):
            self.fail("operator or end of polynomial")
        return result

    def expr(self):
        result = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self):
        result = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                result = result * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    self.pos -= 1
                    self.fail("nonzero constant divisor")
                result = result * (1 / rhs.constant_value())
        return result

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.peek()
            if kind != "num" or not val.isdigit():
                self.fail("nonnegative integer exponent")
            self.take()
            return base ** int(val)
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return Polynomial.const(Fraction(val))
        if kind == "id":
            if self.params is not None and val not in self.params:
                self.fail("declared parameter")
            self.take()
            return Polynomial.var(val)
        if (kind, val) == ("op", "("):
            self.take()
            inner = self.expr()
            if self.peek() != ("op", ")"):
                self.fail("')'")
            self.take()
            return inner
        self.fail("number, parameter or '('")


def parse_polynomial(text: str, params: Iterable[str] | None = None,
                     source: str = "<string>", line: int = 0) -> Polynomial:
    allowed = None if params is None else frozenset(params)
    return _PolyParser(text, allowed, source, line).parse()


def parse_rational(text: str, source: str = "<string>", line: int = 0) -> Fraction:
    poly = parse_polynomial(text, (), source, line)
    return poly.constant_value()


# rational functions


def _sympy_ring(names):
    from sympy.polys.domains import QQ
    from sympy.polys.rings import ring

    return ring(",".join(names), QQ)[0] if names else None


def _to_ring(p: Polynomial, R, names):
    from sympy.polys.domains import QQ

    data = {}
    for m, c in p._terms.items():
        exps = dict(m)
        data[tuple(exps.get(n, 0) for n in names)] = QQ(c.numerator, c.denominator)
    return R.from_dict(data) if data else R.zero


def _from_ring(element, names) -> Polynomial:
    terms = {}
    for exps, c in element.items():
        mono = tuple((n, e) for n, e in zip(names, exps) if e)
        terms[mono] = Fraction(int(c.numerator), int(c.denominator))
    return Polynomial(terms)


def _reduce(num: Polynomial, den: Polynomial) -> tuple[Polynomial, Polynomial]:
    if den.is_zero():
        raise ZeroDivisionError("rational function with zero denominator")
    if num.is_zero():
        return ZERO, ONE
    names = sorted(num.params | den.params)
    if names and not den.is_constant():
        R = _sympy_ring(names)
        _, n, d = _to_ring(num, R, names).cofactors(_to_ring(den, R, names))
        num, den = _from_ring(n, names), _from_ring(d, names)
    _, lead = den.leading_term(names)
    if lead != 1:
        num, den = num * (1 / lead), den * (1 / lead)
    return num, den


class RationalFunction:
    """Quotient of polynomials in canonical reduced form."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, reduced: bool = False):
        num = Polynomial.coerce(num)
        den = ONE if den is None else Polynomial.coerce(den)
        if not reduced:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den

    @property
    def params(self) -> frozenset[str]:
        return self.num.params | self.den.params

    def is_polynomial(self) -> bool:
        return self.den == ONE

    def evaluate(self, v: Valuation) -> Fraction:
        d = self.den.evaluate(v)
        if d == 0:
            raise ZeroDivisionError(f"denominator {self.den} vanishes at {format_valuation(v)}")
        return self.num.evaluate(v) / d

    def derivative(self, name: str) -> "RationalFunction":
        n = self.num.derivative(name) * self.den - self.num * self.den.derivative(name)
        return RationalFunction(n, self.den * self.den)

    def derivative_numerator(self, name: str) -> Polynomial:
        """Numerator of the derivative over ``den^2``; carries its sign."""
        return self.num.derivative(name) * self.den - self.num * self.den.derivative(name)

    def __add__(self, other):
        other = _coerce_rf(other)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduced=True)

    def __sub__(self, other):
        return self + (-_coerce_rf(other))

    def __rsub__(self, other):
        return _coerce_rf(other) - self

    def __mul__(self, other):
        other = _coerce_rf(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_rf(other)
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __eq__(self, other):
        if isinstance(other, (Polynomial, int, Fraction)):
            other = _coerce_rf(other)
        if isinstance(other, RationalFunction):
            return self.num == other.num and self.den == other.den
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __str__(self):
        if self.den == ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self):
        return f"RationalFunction({str(self)!r})"


def _coerce_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    return RationalFunction(Polynomial.coerce(x), ONE, reduced=True)


# regions


class Region:
    """Rectangular box of closed rational intervals, one per parameter."""

    __slots__ = ("_bounds", "label")

    def __init__(self, bounds: Mapping[str, tuple], label: str = ""):
        clean = {}
        for name, (lo, hi) in bounds.items():
            lo, hi = as_fraction(lo), as_fraction(hi)
            if lo > hi:
                raise ValueError(f"empty interval for {name}: [{lo},{hi}]")
            clean[name] = (lo, hi)
        self._bounds = dict(sorted(clean.items()))
        self.label = label

    @property
    def bounds(self) -> dict[str, tuple[Fraction, Fraction]]:
        return dict(self._bounds)

    @property
    def params(self) -> list[str]:
        return list(self._bounds)

    def contains(self, v: Valuation) -> bool:
        return all(lo <= as_fraction(v[n]) <= hi for n, (lo, hi) in self._bounds.items())

    def intersect(self, other: "Region") -> "Region | None":
        """Box intersection; a parameter missing from one box is unconstrained there."""
        merged = dict(self._bounds)
        for name, (lo, hi) in other._bounds.items():
            if name in merged:
                lo, hi = max(lo, merged[name][0]), min(hi, merged[name][1])
                if lo > hi:
                    return None
            merged[name] = (lo, hi)
        label = " & ".join(x for x in (self.label, other.label) if x)
        return Region(merged, label)

    def restrict(self, names: Iterable[str]) -> "Region":
        keep = set(names)
        return Region({n: b for n, b in self._bounds.items() if n in keep}, self.label)

    def __eq__(self, other):
        return isinstance(other, Region) and self._bounds == other._bounds

    def __hash__(self):
        return hash(tuple(self._bounds.items()))

    def __str__(self):
        return ";".join(f"{n}:[{lo},{hi}]" for n, (lo, hi) in self._bounds.items())

    def __repr__(self):
        return f"Region({str(self)!r})"


def region_contains(R: Region, v: Valuation) -> bool:
    return R.contains(v)


def parse_region(text: str, source: str = "<region>", line: int = 0) -> Region:
    bounds = {}
    text = text.strip()
    if not text:
        return Region({})
    for part in text.split(";"):
        m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*\[([^,\]]+),([^\]]+)\]\s*", part)
        if m is None:
            raise ParseError(source, line, "name:[lo,hi]", part.strip())
        name, lo, hi = m.groups()
        if name in bounds:
            raise ParseError(source, line, "each parameter once", name)
        lo_v, hi_v = parse_rational(lo, source, line), parse_rational(hi, source, line)
        if lo_v > hi_v:
            raise ParseError(source, line, "lower bound <= upper bound", part.strip())
        bounds[name] = (lo_v, hi_v)
    return Region(bounds)


RANDOM_DENOMINATOR = 1000


def region_grid(R: Region, grid_points_per_axis: int = 5) -> list[dict[str, Fraction]]:
    """Just the uniform grid part of ``region_sample`` (one point per axis gives the lower corner)."""
    if grid_points_per_axis < 1:
        raise ValueError("grid_points_per_axis must be >= 1")
    n = grid_points_per_axis
    axes = []
    for name in R.params:
        lo, hi = R._bounds[name]
        if n == 1:
            axes.append([lo])
        else:
            axes.append([lo + (hi - lo) * Fraction(k, n - 1) for k in range(n)])
    return [dict(zip(R.params, point)) for point in itertools.product(*axes)]


def region_sample(R: Region, grid_points_per_axis: int = 5, seed: int = 0,
                  keep: Callable[[Valuation], bool] | None = None) -> list[dict[str, Fraction]]:
    """Uniform grid (endpoints included) followed by an equally large seeded batch.

    Random coordinates are multiples of 1/1000 of the interval width.  The
    optional ``keep`` predicate carves a non-rectangular region out of the box.
    """
    if grid_points_per_axis < 1:
        raise ValueError("grid_points_per_axis must be >= 1")
    names = R.params
    grid = region_grid(R, grid_points_per_axis)
    rng = random.Random(seed)
    batch = []
    for _ in range(len(grid)):
        point = {}
        for name in names:
            lo, hi = R._bounds[name]
            point[name] = lo + (hi - lo) * Fraction(rng.randint(0, RANDOM_DENOMINATOR), RANDOM_DENOMINATOR)
        batch.append(point)
    seen = set()
    out = []
    for v in grid + batch:
        key = tuple(v[name] for name in names)
        if key in seen or (keep is not None and not keep(v)):
            continue
        seen.add(key)
        out.append(v)
    return out


def product_of(polys: Iterable[Polynomial]) -> Polynomial:
    return reduce(lambda a, b: a * b, polys, ONE)
