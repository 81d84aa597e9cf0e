"""Exact rational arithmetic used throughout the semantics.

All probabilities, weights and term values are exact rationals; no floating
point enters the model-checking path.  `gmpy2.mpq` is used when available
(it is a drop-in replacement for `fractions.Fraction` for everything we do
and is considerably faster inside the elimination loops), with the stdlib
Fraction as fallback.
"""

from __future__ import annotations

from fractions import Fraction

try:  # pragma: no cover - exercised implicitly by the whole suite
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover
    Rat = Fraction

ZERO = Rat(0)
ONE = Rat(1)


def rat(num, den=None):
    """Build an exact rational from ints, strings like "3/7", or rationals."""
    if den is not None:
        return Rat(num, den)
    if isinstance(num, str):
        return Rat(Fraction(num))
    return Rat(num)


def rat_str(value) -> str:
    """Canonical decimal-free string, "p/q" or "p"."""
    f = Fraction(value.numerator, value.denominator)
    return str(f)


def as_fraction(value) -> Fraction:
    return Fraction(value.numerator, value.denominator)
