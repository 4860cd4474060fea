"""Exact rational scalars shared by every part of the solver.

All multiplier coordinates, value-function ordinates and separation bounds
are arbitrary-precision rationals, so every comparison is decided exactly.
Floats appear in one place only: +/-inf sentinels standing in for missing
break points.  Sentinels order correctly against any rational but must never
enter arithmetic.
"""

from __future__ import annotations

import decimal
import math
from enum import Enum
from fractions import Fraction

#: Exact rational scalar.  ``fractions.Fraction`` already maintains the
#: canonical form we rely on (positive denominator, gcd(|num|, den) = 1,
#: re-established after every operation) and is immutable, hence safe to
#: share across threads.
Rational = Fraction

NEG_INF = -math.inf
POS_INF = math.inf


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def rational(numerator: int, denominator: int = 1) -> Rational:
    return Fraction(numerator, denominator)


def add(a: Rational, b: Rational) -> Rational:
    return a + b


def sub(a: Rational, b: Rational) -> Rational:
    return a - b


def mul(a: Rational, b: Rational) -> Rational:
    return a * b


def div(a: Rational, b: Rational) -> Rational:
    """Exact quotient; division by zero raises ZeroDivisionError."""
    return a / b


def compare(a: Rational, b: Rational) -> Ordering:
    if a < b:
        return Ordering.LESS
    if a > b:
        return Ordering.GREATER
    return Ordering.EQUAL


def midpoint(a: Rational, b: Rational) -> Rational:
    return (a + b) / 2


def is_finite(value) -> bool:
    """True for rationals, False for the +/-inf break-point sentinels."""
    return not (value == POS_INF or value == NEG_INF)


def format_rational(value) -> str:
    """Render as ``p/q`` (plain ``p`` when q = 1); sentinels as ``-inf``/``inf``."""
    if value == POS_INF:
        return "inf"
    if value == NEG_INF:
        return "-inf"
    frac = Fraction(value)
    if frac.denominator == 1:
        return str(frac.numerator)
    return f"{frac.numerator}/{frac.denominator}"


def parse_rational(text: str) -> Rational:
    """Parse ``p`` or ``p/q``.  Raises ValueError on anything else."""
    text = text.strip()
    if "/" in text:
        num_text, _, den_text = text.partition("/")
        num = int(num_text)
        den = int(den_text)
        if den <= 0:
            raise ValueError(f"denominator must be positive: {text!r}")
        return Fraction(num, den)
    return Fraction(int(text))


def to_decimal(value: Rational, digits: int = 12) -> str:
    """Decimal rendering with `digits` significant digits (plot output only)."""
    frac = Fraction(value)
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        dec = decimal.Decimal(frac.numerator) / decimal.Decimal(frac.denominator)
        return str(dec)
