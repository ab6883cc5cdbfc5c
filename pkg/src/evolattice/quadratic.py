"""Exact arithmetic over numbers of the form a + b*sqrt(5).

The 1D survival bounds live in this field: the golden ratio is
(1 + sqrt(5))/2, and the drift and survival constants are polynomials in
it.  Keeping coefficients as Fractions makes every comparison exact, so
the drift sign checks in the interface analysis carry no float error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

__all__ = ["Surd5", "PHI", "phi_power"]

_Scalar = Union[int, Fraction]


def _coerce(v) -> "Surd5":
    if isinstance(v, Surd5):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not a valid scalar here")
    if isinstance(v, (int, Fraction)):
        return Surd5(Fraction(v), Fraction(0))
    raise TypeError(f"cannot mix Surd5 with {type(v).__name__}")


@total_ordering
@dataclass(frozen=True)
class Surd5:
    """a + b*sqrt(5) with exact rational coefficients."""

    a: Fraction
    b: Fraction

    def __init__(self, a: _Scalar = 0, b: _Scalar = 0):
        object.__setattr__(self, "a", Fraction(a))
        object.__setattr__(self, "b", Fraction(b))

    def __add__(self, other):
        o = _coerce(other)
        return Surd5(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Surd5(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        o = _coerce(other)
        # (a + b s)(c + d s) = ac + 5bd + (ad + bc) s  with s^2 = 5
        return Surd5(self.a * o.a + 5 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "Surd5":
        # conjugate trick: 1/(a + b s) = (a - b s)/(a^2 - 5 b^2)
        norm = self.a * self.a - 5 * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("zero or degenerate element")
        return Surd5(self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "Surd5":
        if not isinstance(n, int):
            raise TypeError("integer exponents only")
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        acc = Surd5(1)
        while n:
            if n & 1:
                acc = acc * base
            base = base * base
            n >>= 1
        return acc

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(5)."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return 1 if b > 0 else -1
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # mixed signs: compare a^2 with 5 b^2 on the side of the larger term
        if a > 0:  # b < 0: positive iff a > |b| sqrt(5)
            return 1 if a * a > 5 * b * b else (-1 if a * a < 5 * b * b else 0)
        # a < 0 < b: positive iff b sqrt(5) > |a|
        return 1 if 5 * b * b > a * a else (-1 if 5 * b * b < a * a else 0)

    def __eq__(self, other):
        try:
            o = _coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other):
        o = _coerce(other)
        return (self - o).sign() < 0

    def __hash__(self):
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * 5 ** 0.5

    def __repr__(self):
        return f"Surd5({self.a!r}, {self.b!r})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt5"
        op = "+" if self.b > 0 else "-"
        return f"{self.a} {op} {abs(self.b)}*sqrt5"


PHI = Surd5(Fraction(1, 2), Fraction(1, 2))


def phi_power(n: int) -> Surd5:
    """Golden ratio to any integer power, exactly."""
    return PHI ** n
