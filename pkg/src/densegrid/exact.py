"""Exact-rational helpers: parsing, rendering, ceilings, and integer logs.

All public values in this package are either arbitrary-precision integers or
`fractions.Fraction`; no routine here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .errors import ParseError

#: Default cap on the bit length of any single computed integer or
#: numerator/denominator.  Threshold chains grow doubly exponentially, so
#: evaluations guard against materializing values past this size.
DEFAULT_BIT_BUDGET = 1 << 20


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or "p" into a nonnegative Fraction.

    Raises ParseError on malformed input, a zero denominator, or a negative
    value; float syntax is rejected.
    """
    s = text.strip()
    try:
        if "/" in s:
            num_s, den_s = s.split("/", 1)
            num, den = int(num_s), int(den_s)
            if den == 0:
                raise ParseError(f"zero denominator in rational {text!r}")
            value = Fraction(num, den)
        else:
            value = Fraction(int(s))
    except ValueError as exc:
        raise ParseError(f"not a rational: {text!r}") from exc
    if value < 0:
        raise ParseError(f"negative rational not allowed: {text!r}")
    return value


def format_rational(value: Fraction) -> str:
    """Render in lowest terms as "p/q", or plain "p" for integers."""
    return str(value)


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def floor_log2(n: int) -> int:
    """Largest e with 2^e <= n; requires n >= 1."""
    if n < 1:
        raise ValueError("floor_log2 requires n >= 1")
    return n.bit_length() - 1


def ceil_log2(n: int) -> int:
    """Smallest e with n <= 2^e, with ceil_log2(v) = 0 for v <= 1.

    This is the reduction step for tower comparisons: v <= 2^y iff
    ceil_log2(v) <= y.
    """
    if n <= 1:
        return 0
    return (n - 1).bit_length()


def ceil_log2_fraction(x: Fraction) -> int:
    """Smallest integer e with x <= 2^e, for x > 0 (e may be negative)."""
    if x <= 0:
        raise ValueError("ceil_log2_fraction requires x > 0")
    e = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** e < x:
        e += 1
    while Fraction(2) ** (e - 1) >= x:
        e -= 1
    return e


def ceil_ln_of_reciprocal(eps: Fraction) -> int:
    """Exact ceil(ln(1/eps)) for 0 < eps <= 1.

    Brackets powers of e between partial sums of the exponential series with
    a rigorous tail bound, refining until the comparison is decisive.  e^n is
    irrational for n >= 1, so the loop terminates for every rational input.
    """
    if not 0 < eps <= 1:
        raise ValueError("ceil_ln_of_reciprocal requires 0 < eps <= 1")
    r = 1 / eps
    if r <= 1:
        return 0
    n = 1
    while True:
        lo, hi = _e_power_bounds(n)
        if lo >= r:
            return n
        if hi < r:
            n += 1
            continue
        # ambiguous bracket: tighten and retry the same n
        lo, hi = _e_power_bounds(n, terms=40)
        if lo >= r:
            return n
        if hi < r:
            n += 1
            continue
        raise ArithmeticError(f"could not separate e^{n} from {r}")


def _e_power_bounds(n: int, terms: int = 20) -> tuple[Fraction, Fraction]:
    """Rational bounds lo <= e^n <= hi from the exponential series."""
    partial = sum(Fraction(1, factorial(k)) for k in range(terms))
    tail = Fraction(2, factorial(terms))
    return partial**n, (partial + tail) ** n
