"""
Log-domain positive magnitudes and exact dyadic coordinates.

Magnitudes such as 2^(2k(1-alpha))/alpha overflow IEEE doubles long before the
lacunary depths we care about, so every positive quantity is carried as its
base-2 logarithm.  Coordinates on the line are exact rationals
(GMP rationals, ``gmpy2.mpq``); all breakpoints of the weights are dyadic, and
differences like ``2^-k - 2^-j`` must stay exact at any depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Rational

from gmpy2 import mpq

__all__ = [
    "LogPos",
    "ZERO",
    "ONE",
    "Rat",
    "coord",
    "log2q",
    "lsum",
    "log_close",
]

LN2 = math.log(2.0)
NEG_INF = -math.inf


Rat = type(mpq())


def coord(x) -> Rat:
    """Exact rational coordinate (floats convert without rounding)."""
    if isinstance(x, Rat):
        return x
    if isinstance(x, Rational) and not isinstance(x, int):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def log2q(x) -> float:
    """Accurate base-2 log of a positive rational of any magnitude."""
    if isinstance(x, float):
        if x <= 0.0:
            raise ValueError(f"log2 of non-positive value {x!r}")
        return math.log2(x)
    if not isinstance(x, Rational):
        x = coord(x)
    n, d = x.numerator, x.denominator
    if n <= 0:
        raise ValueError(f"log2 of non-positive value {x!r}")
    if d == 1 and n < (1 << 1000):
        return math.log2(n)
    e = n.bit_length() - d.bit_length()
    if e >= 0:
        m = n / (d << e)
    else:
        m = (n << -e) / d
    return math.log2(m) + e


def lsum(logs) -> float:
    """log2 of a sum of positive terms given by their log2 values.

    Terms are rescaled by the largest one and summed with ``math.fsum`` so
    the result is correctly rounded up to one rounding per term; the order
    of the inputs does not matter.
    """
    logs = [v for v in logs if v != NEG_INF]
    if not logs:
        return NEG_INF
    top = max(logs)
    if top == math.inf:
        return math.inf
    if len(logs) == 1:
        return top
    s = math.fsum(2.0 ** (v - top) for v in logs)
    return top + math.log2(s)


@dataclass(frozen=True, slots=True, order=True)
class LogPos:
    """A nonnegative magnitude stored as its base-2 logarithm.

    ``log2 == -inf`` is the exact zero.
    """

    log2: float

    @classmethod
    def of(cls, x) -> "LogPos":
        if isinstance(x, LogPos):
            return x
        if x == 0:
            return ZERO
        if x < 0:
            raise ValueError(f"LogPos cannot hold negative value {x!r}")
        return cls(log2q(x))

    @classmethod
    def exp2(cls, e: float) -> "LogPos":
        return cls(float(e))

    @property
    def is_zero(self) -> bool:
        return self.log2 == NEG_INF

    def value(self) -> float:
        """Linear value; may overflow to inf or underflow to 0."""
        if self.log2 > 1023.9:
            return math.inf
        return 2.0 ** self.log2

    def __float__(self) -> float:
        return self.value()

    def __add__(self, other) -> "LogPos":
        other = LogPos.of(other)
        a, b = self.log2, other.log2
        if a < b:
            a, b = b, a
        if b == NEG_INF:
            return LogPos(a)
        return LogPos(a + math.log1p(2.0 ** (b - a)) / LN2)

    __radd__ = __add__

    def __sub__(self, other) -> "LogPos":
        """Difference ``self - other``; requires ``self >= other``."""
        other = LogPos.of(other)
        if other.log2 == NEG_INF:
            return self
        if other.log2 > self.log2:
            raise ValueError("LogPos subtraction would go negative")
        if other.log2 == self.log2:
            return ZERO
        return LogPos(self.log2 + math.log1p(-(2.0 ** (other.log2 - self.log2))) / LN2)

    def __mul__(self, other) -> "LogPos":
        other = LogPos.of(other)
        if self.log2 == NEG_INF or other.log2 == NEG_INF:
            return ZERO
        return LogPos(self.log2 + other.log2)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogPos":
        other = LogPos.of(other)
        if other.log2 == NEG_INF:
            raise ZeroDivisionError("division by LogPos zero")
        if self.log2 == NEG_INF:
            return ZERO
        return LogPos(self.log2 - other.log2)

    def __pow__(self, t: float) -> "LogPos":
        if self.log2 == NEG_INF:
            if t > 0:
                return ZERO
            if t == 0:
                return ONE
            raise ZeroDivisionError("negative power of zero")
        return LogPos(self.log2 * t)

    def inverse(self) -> "LogPos":
        return ONE / self

    def __repr__(self) -> str:
        if self.log2 == NEG_INF:
            return "LogPos(0)"
        if abs(self.log2) < 60:
            return f"LogPos({self.value():.6g})"
        return f"LogPos(2^{self.log2:.6f})"


ZERO = LogPos(NEG_INF)
ONE = LogPos(0.0)


def log_close(a, b, ulps: float = 4) -> bool:
    """Two log2 values agree to ``ulps`` units in the last place.

    The unit is taken at ``max(|a|, |b|, 1)`` so that magnitudes near 1
    (log2 near 0) are compared at the resolution of their linear value.
    """
    if isinstance(a, LogPos):
        a = a.log2
    if isinstance(b, LogPos):
        b = b.log2
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    scale = max(abs(a), abs(b), 1.0)
    return abs(a - b) <= ulps * math.ulp(scale)
