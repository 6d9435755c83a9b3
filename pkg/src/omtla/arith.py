"""Exact rational and delta-rational arithmetic.

Rationals are :class:`fractions.Fraction` (always canonical).  A
:class:`DeltaRational` is ``real + delta * eps`` for a symbolic positive
infinitesimal ``eps``; strict bounds ``x < b`` become ``x <= b - eps``.
"""
from __future__ import annotations

import math
from fractions import Fraction

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class UndefinedArithmetic(ArithmeticError):
    """Raised on division by zero."""


def rat(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def add(a, b):
    return a + b


def sub(a, b):
    return a - b


def mul(a, b):
    return a * b


def div(a, b):
    if b == 0:
        raise UndefinedArithmetic("undefined arithmetic: division by zero")
    return Fraction(a) / b


def neg(a):
    return -a


def cmp(a, b) -> int:
    return (a > b) - (a < b)


def floor(a) -> int:
    return math.floor(a)


def ceil(a) -> int:
    return math.ceil(a)


class DeltaRational:
    """Immutable pair ``(real, delta)`` ordered lexicographically."""

    __slots__ = ("r", "d")

    def __init__(self, r=ZERO, d=ZERO):
        self.r = r if isinstance(r, Fraction) else Fraction(r)
        self.d = d if isinstance(d, Fraction) else Fraction(d)

    @property
    def real_part(self) -> Fraction:
        return self.r

    @property
    def delta_part(self) -> Fraction:
        return self.d

    def __add__(self, other):
        return DeltaRational(self.r + other.r, self.d + other.d)

    def __sub__(self, other):
        return DeltaRational(self.r - other.r, self.d - other.d)

    def __neg__(self):
        return DeltaRational(-self.r, -self.d)

    def scale(self, k) -> DeltaRational:
        return DeltaRational(self.r * k, self.d * k)

    def __mul__(self, k):
        if isinstance(k, DeltaRational):
            return NotImplemented
        return DeltaRational(self.r * k, self.d * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        if k == 0:
            raise UndefinedArithmetic("undefined arithmetic: division by zero")
        return DeltaRational(self.r / k, self.d / k)

    def _key(self):
        return (self.r, self.d)

    def __eq__(self, other):
        if isinstance(other, DeltaRational):
            return self.r == other.r and self.d == other.d
        if isinstance(other, (int, Fraction)):
            return self.d == 0 and self.r == other
        return NotImplemented

    def __hash__(self):
        return hash((self.r, self.d))

    def __lt__(self, other):
        if isinstance(other, DeltaRational):
            return self.r < other.r or (self.r == other.r and self.d < other.d)
        if isinstance(other, Infinity):
            return other.sign > 0
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, DeltaRational):
            return self.r < other.r or (self.r == other.r and self.d <= other.d)
        if isinstance(other, Infinity):
            return other.sign > 0
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, DeltaRational):
            return self.r > other.r or (self.r == other.r and self.d > other.d)
        if isinstance(other, Infinity):
            return other.sign < 0
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, DeltaRational):
            return self.r > other.r or (self.r == other.r and self.d >= other.d)
        if isinstance(other, Infinity):
            return other.sign < 0
        return NotImplemented

    def is_integral(self) -> bool:
        return self.d == 0 and self.r.denominator == 1

    def floor(self) -> int:
        """Largest integer ``n`` with ``n <= self``."""
        f = math.floor(self.r)
        if self.r == f and self.d < 0:
            return f - 1
        return f

    def ceil(self) -> int:
        """Smallest integer ``n`` with ``n >= self``."""
        c = math.ceil(self.r)
        if self.r == c and self.d > 0:
            return c + 1
        return c

    def concrete(self, eps: Fraction) -> Fraction:
        return self.r + self.d * eps

    def __repr__(self):
        return f"DeltaRational({self.r}, {self.d})"

    def __str__(self):
        return render_delta(self)


class Infinity:
    """``-oo`` / ``+oo``; compares below/above every finite value."""

    __slots__ = ("sign",)

    def __init__(self, sign: int):
        self.sign = sign

    def __eq__(self, other):
        return isinstance(other, Infinity) and other.sign == self.sign

    def __hash__(self):
        return hash(("inf", self.sign))

    def __lt__(self, other):
        if isinstance(other, Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        if isinstance(other, Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __ge__(self, other):
        return self == other or self > other

    def __neg__(self):
        return Infinity(-self.sign)

    def __repr__(self):
        return "POS_INF" if self.sign > 0 else "NEG_INF"

    def __str__(self):
        return "+oo" if self.sign > 0 else "-oo"


NEG_INF = Infinity(-1)
POS_INF = Infinity(1)


def is_finite(v) -> bool:
    return not isinstance(v, Infinity)


def delta(r, d=0) -> DeltaRational:
    return DeltaRational(Fraction(r), Fraction(d))


# -- textual rendering -------------------------------------------------------

def render_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def render_delta(v: DeltaRational) -> str:
    if v.d == 0:
        return render_rational(v.r)
    return f"(+ {render_rational(v.r)} (* {render_rational(v.d)} epsilon))"


def render_value(v) -> str:
    """Render a rational, delta-rational or infinity."""
    if isinstance(v, Infinity):
        return str(v)
    if isinstance(v, DeltaRational):
        return render_delta(v)
    return render_rational(v)


def parse_rational(text: str) -> Fraction:
    """Inverse of :func:`render_rational`; also accepts decimals and ``p/q``."""
    s = text.strip()
    if s.startswith("(/") and s.endswith(")"):
        parts = s[2:-1].split()
        if len(parts) != 2:
            raise ValueError(f"malformed fraction: {text!r}")
        den = Fraction(parts[1])
        if den == 0:
            raise UndefinedArithmetic("undefined arithmetic: division by zero")
        return Fraction(parts[0]) / den
    if s.startswith("(-") and s.endswith(")"):
        return -parse_rational(s[2:-1])
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed number: {text!r}") from exc
