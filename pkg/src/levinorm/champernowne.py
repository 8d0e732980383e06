"""Champernowne constant digits in any integer base: the concatenation
0.(1)(2)(3)... of base-b numerals, the classical normal-number baseline the
discrepancy reports compare against."""

from __future__ import annotations

from fractions import Fraction

from .dyadic import Dyadic

_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"


def _check_base(base: int) -> None:
    if not (2 <= base <= len(_ALPHABET)):
        raise ValueError(f"base must be in 2..{len(_ALPHABET)}")


def _numeral(n: int, base: int) -> str:
    digits = []
    while n:
        n, d = divmod(n, base)
        digits.append(_ALPHABET[d])
    return "".join(reversed(digits))


def champernowne_digits(base: int, count: int) -> str:
    """First `count` fractional digits, by direct concatenation; O(count)."""
    _check_base(base)
    if count < 1:
        raise ValueError("count must be positive")
    parts = []
    total = 0
    n = 1
    while total < count:
        s = _numeral(n, base)
        parts.append(s)
        total += len(s)
        n += 1
    return "".join(parts)[:count]


def champernowne_digit_at(base: int, position: int) -> str:
    """Digit at 1-indexed `position` without generating the prefix.

    Walks the blocks of m-digit numerals (m (base-1) base^(m-1) digits each),
    so the work is O(log position) arithmetic operations.
    """
    _check_base(base)
    if position < 1:
        raise ValueError("position must be >= 1")
    pos = position
    m = 1
    while True:
        block = m * (base - 1) * base ** (m - 1)
        if pos <= block:
            break
        pos -= block
        m += 1
    number = base ** (m - 1) + (pos - 1) // m
    return _numeral(number, base)[(pos - 1) % m]


def champernowne_fraction(base: int, ndigits: int) -> Fraction:
    """Exact value of the first ndigits digits; the truncation error is below
    one ulp, i.e. base^-ndigits."""
    s = champernowne_digits(base, ndigits)
    return Fraction(int(s, base), base**ndigits)


def champernowne_dyadic(bits: int) -> Dyadic:
    """Base-2 prefix as an exact dyadic, e.g. for use as a construction start
    value with a rich expansion."""
    s = champernowne_digits(2, bits)
    return Dyadic(int(s, 2), bits)
