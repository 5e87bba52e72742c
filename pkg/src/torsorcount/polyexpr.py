"""Integer polynomials in Cox variables X0..X{n-1}.

Grammar (recursive descent)::

    expr   := term (('+' | '-') term)*
    term   := unary ('*' unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') INT)?
    atom   := INT | VAR | '(' expr ')'

VAR is ``X<k>`` or ``x<k>``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence


class PolyError(ValueError):
    pass


@dataclass(frozen=True)
class Poly:
    nvars: int
    terms: tuple[tuple[tuple[int, ...], int], ...]  # sorted (exponents, coefficient), no zero coefficients

    @classmethod
    def from_dict(cls, nvars: int, d: Mapping[tuple[int, ...], int]) -> "Poly":
        return cls(nvars, tuple(sorted((e, c) for e, c in d.items() if c)))

    @classmethod
    def const(cls, nvars: int, c: int) -> "Poly":
        return cls.from_dict(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, k: int) -> "Poly":
        return cls.from_dict(nvars, {tuple(int(i == k) for i in range(nvars)): 1})

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.terms)

    def __add__(self, other: "Poly") -> "Poly":
        out = self.as_dict()
        for e, c in other.terms:
            out[e] = out.get(e, 0) + c
        return Poly.from_dict(self.nvars, out)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[tuple[int, ...], int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly.from_dict(self.nvars, out)

    def __pow__(self, k: int) -> "Poly":
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(not any(e) for e, _ in self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=-1)

    def __call__(self, X: Sequence[int]) -> int:
        return sum(c * math.prod(x**k for x, k in zip(X, e) if k) for e, c in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms, key=lambda t: (-sum(t[0]), [-x for x in t[0]])):
            mono = "*".join(f"X{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if not mono:
                body = str(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}*{mono}"
            parts.append(("-" if c < 0 else "+", body))
        text = "".join(f" {s} {b}" for s, b in parts).strip()
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


_TOKEN = re.compile(r"\s*(?:(\d+)|([Xx])(\d+)|(\*\*|[-+*^()]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolyError(f"unexpected character at position {pos}: {text[pos:pos + 10]!r}")
        if m.group(1):
            out.append(("int", m.group(1)))
        elif m.group(2):
            out.append(("var", m.group(3)))
        else:
            op = m.group(4)
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    out.append(("end", ""))
    return out


class _Parser:
    def __init__(self, text: str, nvars: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.n = nvars

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> str:
        k, v = self.take()
        if k != kind or (value is not None and v != value):
            raise PolyError(f"expected {value or kind}, found {v or k!r}")
        return v

    def expr(self) -> Poly:
        out = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Poly:
        out = self.unary()
        while self.peek() == ("op", "*"):
            self.take()
            out = out * self.unary()
        return out

    def unary(self) -> Poly:
        if self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            inner = self.unary()
            return inner if op == "+" else -inner
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            k = int(self.expect("int"))
            if k > 64:
                raise PolyError("exponent too large")
            return base**k
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "int":
            return Poly.const(self.n, int(val))
        if kind == "var":
            k = int(val)
            if k >= self.n:
                raise PolyError(f"variable X{k} out of range for {self.n} Cox coordinates")
            return Poly.var(self.n, k)
        if (kind, val) == ("op", "("):
            out = self.expr()
            self.expect("op", ")")
            return out
        raise PolyError(f"unexpected token {val or kind!r}")


def parse_poly(text: str, nvars: int) -> Poly:
    p = _Parser(text, nvars)
    out = p.expr()
    p.expect("end")
    return out


def to_sympy(poly: Poly):
    import sympy

    xs = sympy.symbols(f"X0:{poly.nvars}")
    return sympy.Add(*(c * sympy.Mul(*(x**k for x, k in zip(xs, e))) for e, c in poly.terms)), xs


def coprimality_witness(f: Poly, g: Poly) -> str | None:
    """'gcd(f, g) = 1' when the polynomial gcd over Q[X] is constant, else None."""
    import sympy

    fe, xs = to_sympy(f)
    ge, _ = to_sympy(g)
    if f.is_zero or g.is_zero:
        return None
    h = sympy.gcd(sympy.Poly(fe, *xs), sympy.Poly(ge, *xs))
    return "gcd(f, g) = 1" if h.total_degree() == 0 else None
