"""Gaussian rational scalars a + b*i with a, b rational.

Backed by gmpy2.mpq so arithmetic stays exact no matter how large the
denominators get.
"""
from __future__ import annotations

import re
from fractions import Fraction

from gmpy2 import mpq

from .errors import ScalarParseError

_ZERO = mpq(0)
_ONE = mpq(1)

_RAT = r"[+-]?\d+(?:/\d+)?"
_SCALAR_RE = re.compile(
    rf"^(?:(?P<re>{_RAT})(?P<im1>[+-]\d+(?:/\d+)?\*i|[+-]i)?|(?P<im2>{_RAT}\*i|[+-]?i))$"
)


def to_mpq(x) -> mpq:
    if isinstance(x, float):
        return mpq(Fraction(x))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def _rat_str(q: mpq) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _imag_coeff(token: str) -> mpq:
    token = token.replace("*i", "")
    if token.endswith("i"):
        token = token[:-1] + "1"
    return mpq(token.lstrip("+"))


class GQ:
    """Exact element of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZERO) else to_mpq(re)
        self.im = im if type(im) is type(_ZERO) else to_mpq(im)

    @classmethod
    def coerce(cls, x) -> "GQ":
        if isinstance(x, GQ):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, str):
            return parse_scalar(x)
        return cls(x)

    def __add__(self, o):
        if not isinstance(o, GQ):
            o = GQ.coerce(o)
        return GQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        if not isinstance(o, GQ):
            o = GQ.coerce(o)
        return GQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GQ.coerce(o) - self

    def __mul__(self, o):
        if not isinstance(o, GQ):
            o = GQ.coerce(o)
        a, b, c, d = self.re, self.im, o.re, o.im
        return GQ(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inverse(self) -> "GQ":
        a, b = self.re, self.im
        n = a * a + b * b
        if not n:
            raise ZeroDivisionError("inverse of zero")
        return GQ(a / n, -b / n)

    def __truediv__(self, o):
        if not isinstance(o, GQ):
            o = GQ.coerce(o)
        return self * o.inverse()

    def __rtruediv__(self, o):
        return GQ.coerce(o) * self.inverse()

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __pos__(self):
        return self

    def conj(self) -> "GQ":
        return GQ(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        if not isinstance(o, GQ):
            try:
                o = GQ.coerce(o)
            except (TypeError, ValueError, ScalarParseError):
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GQ({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


ZERO = GQ(0)
ONE = GQ(1)
I = GQ(0, 1)


def format_scalar(x: GQ) -> str:
    """Canonical text form "a/b+c/d*i"; zero parts are omitted, 0 is "0"."""
    if not x.im:
        return _rat_str(x.re)
    im = _rat_str(abs(x.im)) + "*i"
    if not x.re:
        return ("-" if x.im < 0 else "") + im
    return _rat_str(x.re) + ("-" if x.im < 0 else "+") + im


def parse_scalar(text: str) -> GQ:
    s = text.strip().replace(" ", "")
    m = _SCALAR_RE.match(s)
    if not m:
        raise ScalarParseError(f"malformed scalar {text!r}")
    if re.search(r"/0+(?:\D|$)", s):
        raise ScalarParseError(f"zero denominator in {text!r}")
    if m.group("im2") is not None:
        return GQ(0, _imag_coeff(m.group("im2")))
    re_part = mpq(m.group("re").lstrip("+"))
    im_part = _imag_coeff(m.group("im1")) if m.group("im1") else _ZERO
    return GQ(re_part, im_part)
