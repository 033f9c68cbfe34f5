"""Small numeric helpers shared by the exact (Fraction) and float code paths."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

#: relative slack used whenever a comparison involves a float
FLOAT_TOL = 1e-12


def exact(x) -> Fraction:
    """Convert a JSON-ish number to an exact rational.

    Floats are read through their shortest decimal repr, so ``0.1`` becomes
    ``1/10`` rather than the binary expansion. Strings like ``"3/8"`` are
    accepted as well.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    raise TypeError(f"cannot read {x!r} as a number")


def is_exact(*xs) -> bool:
    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in xs)


def eq(a, b) -> bool:
    if is_exact(a, b):
        return a == b
    return abs(a - b) <= FLOAT_TOL * max(1.0, abs(a), abs(b))


def lt(a, b) -> bool:
    """Strict ``a < b`` that is robust to float noise."""
    return a < b and not eq(a, b)


def to_json_number(x):
    """Floats for reports; keeps ints as ints."""
    if isinstance(x, bool):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return float(x)


def to_json_exact(x):
    """Rational as ``"p/q"`` string when exact, float otherwise (round-trips)."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, int):
        return x
    return float(x)


try:  # fast exact rationals for the inner loops when available
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction


def to_q(x):
    if isinstance(x, Fraction):
        return Q(x.numerator, x.denominator)
    return Q(x)


def from_q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))
