"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple

from .orders import Exponents, MonomialOrder

Terms = Dict[Exponents, Fraction]


class PolynomialSyntaxError(ValueError):
    def __init__(self, message, text="", position=0):
        super().__init__(message)
        self.text = text
        self.position = position


class PolyRing:
    """Polynomial ring Q[names] together with a monomial order."""

    def __init__(self, names: Sequence[str], order="grevlex"):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.names = names
        self.nvars = len(names)
        if isinstance(order, str):
            order = MonomialOrder(order, self.nvars)
        if order.nvars != self.nvars:
            raise ValueError("order does not match the number of variables")
        self.order = order
        self.key = order.key_function()
        self.zero_exp = (0,) * self.nvars
        self._index = {n: i for i, n in enumerate(names)}

    def __repr__(self):
        return f"PolyRing({list(self.names)}, {self.order.kind})"

    def __eq__(self, other):
        return (isinstance(other, PolyRing) and self.names == other.names
                and self.order == other.order)

    def __hash__(self):
        return hash((self.names, self.order))

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def gen(self, name_or_index) -> "Polynomial":
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        e = [0] * self.nvars
        e[i] = 1
        return Polynomial(self, {tuple(e): Fraction(1)})

    def gens(self):
        return [self.gen(i) for i in range(self.nvars)]

    def const(self, c) -> "Polynomial":
        c = Fraction(c)
        return Polynomial(self, {self.zero_exp: c} if c else {})

    def zero(self):
        return Polynomial(self, {})

    def one(self):
        return self.const(1)

    def with_order(self, order) -> "PolyRing":
        return PolyRing(self.names, order)

    def parse(self, text) -> "Polynomial":
        if isinstance(text, Polynomial):
            if text.ring.names != self.names:
                raise ValueError("polynomial belongs to a different ring")
            return Polynomial(self, text.terms)
        if isinstance(text, (int, Fraction)):
            return self.const(text)
        return Polynomial(self, _Parser(self, str(text)).parse())


class Polynomial:
    """Immutable polynomial; ``terms`` maps exponent tuples to nonzero Fractions."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: Mapping[Exponents, Fraction]):
        self.ring = ring
        self.terms = {e: Fraction(c) for e, c in terms.items() if c}
        self._hash = None

    # -- structure ---------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return not self.terms or (len(self.terms) == 1 and self.ring.zero_exp in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(self.ring.zero_exp, Fraction(0))

    def sorted_terms(self):
        key = self.ring.key
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def lead_monomial(self) -> Exponents:
        if not self.terms:
            raise ValueError("zero polynomial has no lead term")
        return max(self.terms, key=self.ring.key)

    def lead_coefficient(self) -> Fraction:
        return self.terms[self.lead_monomial()]

    def degree(self, weights=None) -> int:
        if not self.terms:
            return -1
        if weights is None:
            return max(sum(e) for e in self.terms)
        return max(sum(w * a for w, a in zip(weights, e)) for e in self.terms)

    def is_homogeneous(self, weights=None) -> bool:
        if weights is None:
            weights = (1,) * self.ring.nvars
        degs = {sum(w * a for w, a in zip(weights, e)) for e in self.terms}
        return len(degs) <= 1

    def variables(self):
        used = set()
        for e in self.terms:
            used.update(i for i, a in enumerate(e) if a)
        return sorted(used)

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.ring is not self.ring and other.ring.names != self.ring.names:
                raise ValueError("polynomials from different rings")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = dict(self.terms)
        for e, c in other.terms.items():
            v = t.get(e, 0) + c
            if v:
                t[e] = v
            else:
                t.pop(e, None)
        return Polynomial(self.ring, t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t: Terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = t.get(e, 0) + c1 * c2
                if v:
                    t[e] = v
                else:
                    t.pop(e, None)
        return Polynomial(self.ring, t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Polynomial":
        c = Fraction(c)
        return Polynomial(self.ring, {e: c * v for e, v in self.terms.items()})

    def monic(self) -> "Polynomial":
        return self.scale(1 / self.lead_coefficient()) if self.terms else self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ring.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ring.names == other.ring.names and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring.names, frozenset(self.terms.items())))
        return self._hash

    # -- calculus and substitution ----------------------------------------
    def derivative(self, var) -> "Polynomial":
        i = var if isinstance(var, int) else self.ring.index(var)
        t: Terms = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                t[tuple(ne)] = c * e[i]
        return Polynomial(self.ring, t)

    def substitute(self, images: Sequence["Polynomial"], target: PolyRing = None) -> "Polynomial":
        """Ring map sending variable i to ``images[i]``."""
        if target is None:
            target = images[0].ring if images else self.ring
        if len(images) != self.ring.nvars:
            raise ValueError("need one image per variable")
        powers = [dict() for _ in images]

        def power(i, k):
            p = powers[i].get(k)
            if p is None:
                p = images[i] ** k
                powers[i][k] = p
            return p

        total: Terms = {}
        for e, c in self.terms.items():
            term = target.const(c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            for te, tc in term.terms.items():
                v = total.get(te, 0) + tc
                if v:
                    total[te] = v
                else:
                    total.pop(te, None)
        return Polynomial(target, total)

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for name, k in zip(self.ring.names, e):
                if k:
                    term *= Fraction(values[name]) ** k
            total += term
        return total

    def to_ring(self, ring: PolyRing) -> "Polynomial":
        """Re-express in a ring whose variables include ours (by name)."""
        idx = [ring.index(n) for n in self.ring.names]
        t = {}
        for e, c in self.terms.items():
            ne = [0] * ring.nvars
            for i, k in zip(idx, e):
                ne[i] = k
            t[tuple(ne)] = c
        return Polynomial(ring, t)

    # -- printing ----------------------------------------------------------
    def __str__(self):
        return format_terms(self.sorted_terms(), self.ring.names)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def format_monomial(e: Exponents, names) -> str:
    parts = []
    for n, k in zip(names, e):
        if k == 1:
            parts.append(n)
        elif k:
            parts.append(f"{n}^{k}")
    return "*".join(parts)


def format_terms(items: Iterable[Tuple[Exponents, Fraction]], names) -> str:
    out = []
    for e, c in items:
        mono = format_monomial(e, names)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        if not out:
            out.append(body if sign == "+" else "-" + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out) if out else "0"


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


class _Parser:
    """Recursive descent over + - * / ^ and parentheses; '/' needs a constant divisor."""

    def __init__(self, ring: PolyRing, text: str):
        self.ring = ring
        self.text = text
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m:
                raise PolynomialSyntaxError(
                    f"unexpected character {stripped[pos:].lstrip()[:1]!r} in {text!r}",
                    text, pos)
            kind = "num" if m.group(1) else "name" if m.group(2) else "op"
            val = m.group(m.lastindex)
            if val == "**":
                val = "^"
            self.tokens.append((kind, val, m.start(m.lastindex)))
            pos = m.end()
        self.i = 0

    def error(self, msg):
        pos = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)
        raise PolynomialSyntaxError(f"{msg} in {self.text!r}", self.text, pos)

    def peek(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Terms:
        if not self.tokens:
            self.error("empty polynomial")
        p = self.expr()
        if self.i != len(self.tokens):
            self.error(f"unexpected token {self.peek()!r}")
        return p.terms

    def expr(self):
        if self.peek() in ("+", "-"):
            sign = self.take()[1]
            p = self.term()
            if sign == "-":
                p = -p
        else:
            p = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.power()
        while self.peek() in ("*", "/"):
            op = self.take()[1]
            q = self.power()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    self.error("division by a non-constant or zero")
                p = p.scale(1 / q.constant_value())
        return p

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.take()
            if self.i >= len(self.tokens) or self.tokens[self.i][0] != "num":
                self.error("exponent must be a non-negative integer")
            base = base ** int(self.take()[1])
        return base

    def atom(self):
        if self.i >= len(self.tokens):
            self.error("unexpected end of input")
        kind, val, _ = self.tokens[self.i]
        if kind == "num":
            self.i += 1
            return self.ring.const(int(val))
        if kind == "name":
            self.i += 1
            if val not in self.ring._index:
                self.error(f"unknown variable {val!r}")
            return self.ring.gen(val)
        if val == "(":
            self.i += 1
            p = self.expr()
            if self.peek() != ")":
                self.error("missing ')'")
            self.i += 1
            return p
        if val == "-":
            self.i += 1
            return -self.atom()
        self.error(f"unexpected token {val!r}")
