"""Scalar arithmetic for the two modes: exact complex rationals and floats.

Exact values are ``Fraction`` when real and ``ComplexRational`` otherwise;
every operation on a ``ComplexRational`` collapses back to ``Fraction``
when the imaginary part cancels, so real models never pay for the
complex path.
"""

from __future__ import annotations

from fractions import Fraction

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

# global comparison tolerance for floating mode
FLOAT_TOL = 1e-10


class ComplexRational:
    """re + i*im with Fraction parts. Immutable."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("ComplexRational is immutable")

    @staticmethod
    def make(re, im):
        if im == 0:
            return Fraction(re)
        return ComplexRational(re, im)

    @staticmethod
    def _parts(x):
        if isinstance(x, ComplexRational):
            return x.re, x.im
        if isinstance(x, (int, Fraction)):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return ComplexRational.make(self.re + p[0], self.im + p[1])

    __radd__ = __add__

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return ComplexRational.make(self.re - p[0], self.im - p[1])

    def __rsub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return ComplexRational.make(p[0] - self.re, p[1] - self.im)

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = p
        return ComplexRational.make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        c, d = p
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("division by zero")
        a, b = self.re, self.im
        return ComplexRational.make((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return ComplexRational(*p) / self

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self ** (-n))
        result = Fraction(1)
        base = self
        while n:
            if n & 1:
                result = base * result
            base = base * base
            n >>= 1
        return result

    def conjugate(self):
        return ComplexRational.make(self.re, -self.im)

    def __eq__(self, other):
        p = self._parts(other)
        if p is None:
            if isinstance(other, complex):
                return complex(self) == other
            return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"ComplexRational({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


def parse_rational(s) -> Fraction:
    if isinstance(s, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        return Fraction(s).limit_denominator(10**12)
    if isinstance(s, str):
        return Fraction(s.strip())
    raise TypeError(f"cannot read {s!r} as a rational")


def to_exact(x):
    """Coerce int / Fraction / "p/q" / [re, im] / complex to an exact scalar."""
    if isinstance(x, ComplexRational):
        return ComplexRational.make(x.re, x.im)
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex scalar must be [re, im], got {x!r}")
        return ComplexRational.make(parse_rational(x[0]), parse_rational(x[1]))
    if isinstance(x, complex):
        return ComplexRational.make(parse_rational(x.real), parse_rational(x.imag))
    return parse_rational(x)


def to_float(x) -> complex:
    if isinstance(x, (list, tuple)):
        return complex(float(parse_rational(x[0])), float(parse_rational(x[1])))
    if isinstance(x, str):
        return complex(float(Fraction(x)))
    return complex(x)


def coerce(x, mode: str):
    return to_exact(x) if mode == EXACT else to_float(x)


def real_part(x):
    if isinstance(x, ComplexRational):
        return x.re
    if isinstance(x, complex):
        return x.real
    return x


def imag_part(x):
    if isinstance(x, ComplexRational):
        return x.im
    if isinstance(x, complex):
        return x.imag
    return 0


def conj(x):
    if isinstance(x, (ComplexRational, complex)):
        return x.conjugate()
    return x


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, ComplexRational))


def is_zero(x, tol: float = FLOAT_TOL) -> bool:
    if is_exact(x):
        return x == 0
    return abs(x) <= tol


def close(x, y, tol: float = FLOAT_TOL) -> bool:
    """Exact equality if both sides are exact, else |x - y| <= tol."""
    if is_exact(x) and is_exact(y):
        return x == y
    return abs(complex(x) - complex(y)) <= tol


def format_scalar(x) -> str:
    """Canonical text: "p/q" for rationals, "re+imi" for complex."""
    if isinstance(x, ComplexRational):
        im = x.im
        sign = "-" if im < 0 else "+"
        return f"{x.re}{sign}{abs(im)}i"
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    if isinstance(x, complex):
        if x.imag == 0:
            return repr(x.real)
        return repr(x)
    return repr(x)


def to_json_scalar(x):
    """JSON form: "p/q" string, [re, im] pair, or a float."""
    if isinstance(x, ComplexRational):
        return [str(x.re), str(x.im)]
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    if isinstance(x, complex):
        if x.imag == 0:
            return x.real
        return [x.real, x.imag]
    return x
