"""Exact dyadic arithmetic and error-tracked mod-1 orbits.

Everything the candidate search accumulates is a dyadic rational: the step
increments have the form a_r / (2^{n_r} q_r) with q_r a power of two, so sums
stay representable as numerator / 2^scale with a big-integer numerator.  This
module provides that exact substrate plus the two operations every analyzer
leans on:

* orbit_mod1 produces the fractional parts {beta * lambda^(start + x)} for a
  block of consecutive exponents.  For integer bases the whole orbit lives on
  the fixed grid k / den (den = denominator of beta) and is generated by
  modular arithmetic, one small multiply per point, with zero error.  Rational
  bases are handled with exact fractions; real bases carry a certified
  interval and fail loudly when the interval can no longer be reduced mod 1.

* unit_exp is the single point where exactness is traded for doubles: the
  argument of cos/sin is always an exactly reduced value in [0, 1), so the
  trigonometric error never compounds across an exponential sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import PrecisionExhausted

TWO_PI = 2.0 * math.pi

RationalLike = Union[int, Fraction, "Dyadic"]


def _strip_twos(num: int, scale: int) -> tuple[int, int]:
    """Canonical form: numerator odd or zero, or scale zero."""
    if num == 0:
        return 0, 0
    if scale == 0:
        return num, 0
    twos = (num & -num).bit_length() - 1
    k = min(twos, scale)
    return num >> k, scale - k


class Dyadic:
    """Exact dyadic rational num / 2^scale (scale >= 0), immutable.

    All arithmetic is exact; there is no rounding anywhere in this class.
    """

    __slots__ = ("num", "scale")

    def __init__(self, num: int, scale: int = 0):
        if scale < 0:
            # Negative scale is just a left shift of the numerator.
            num <<= -scale
            scale = 0
        n, s = _strip_twos(int(num), int(scale))
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "scale", s)

    def __setattr__(self, *a):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def from_fraction(cls, fr: Fraction) -> "Dyadic":
        den = fr.denominator
        if den & (den - 1):
            raise ValueError(f"{fr} is not dyadic (denominator not a power of two)")
        return cls(fr.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.scale)

    def __add__(self, other: RationalLike):
        if isinstance(other, int):
            other = Dyadic(other)
        if isinstance(other, Dyadic):
            s = max(self.scale, other.scale)
            return Dyadic(
                (self.num << (s - self.scale)) + (other.num << (s - other.scale)), s
            )
        if isinstance(other, Fraction):
            return self.to_fraction() + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Dyadic(-self.num, self.scale)

    def __sub__(self, other: RationalLike):
        if isinstance(other, (int, Dyadic)):
            return self + (-other if isinstance(other, Dyadic) else Dyadic(-other))
        if isinstance(other, Fraction):
            return self.to_fraction() - other
        return NotImplemented

    def __rsub__(self, other: RationalLike):
        return (-self) + other

    def __mul__(self, other: RationalLike):
        if isinstance(other, int):
            return Dyadic(self.num * other, self.scale)
        if isinstance(other, Dyadic):
            return Dyadic(self.num * other.num, self.scale + other.scale)
        if isinstance(other, Fraction):
            return self.to_fraction() * other
        return NotImplemented

    __rmul__ = __mul__

    def _cmp(self, other: RationalLike) -> int:
        if isinstance(other, int):
            other = Dyadic(other)
        if isinstance(other, Dyadic):
            if self.scale >= other.scale:
                a, b = self.num, other.num << (self.scale - other.scale)
            else:
                a, b = self.num << (other.scale - self.scale), other.num
            return (a > b) - (a < b)
        if isinstance(other, Fraction):
            a = self.num * other.denominator
            b = other.numerator << self.scale
            return (a > b) - (a < b)
        raise TypeError(f"cannot compare Dyadic with {type(other)!r}")

    def __eq__(self, other):
        try:
            return self._cmp(other) == 0
        except TypeError:
            return NotImplemented

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash(self.to_fraction())

    def __bool__(self):
        return self.num != 0

    def floor(self) -> int:
        # Arithmetic right shift floors for negative numerators as well.
        return self.num >> self.scale

    def frac(self) -> "Dyadic":
        """x - floor(x), exactly, in [0, 1)."""
        return Dyadic(self.num & ((1 << self.scale) - 1), self.scale)

    def __float__(self) -> float:
        # int / int division is correctly rounded in CPython, even for
        # numerators far beyond the double range.
        return self.num / (1 << self.scale)

    def __repr__(self):
        return f"Dyadic({self.num}, {self.scale})"

    def __str__(self):
        return f"{self.num}/2^{self.scale}" if self.scale else str(self.num)


DYADIC_ZERO = Dyadic(0)
DYADIC_ONE = Dyadic(1)


def frac(x: Dyadic) -> Dyadic:
    """Fractional part of an exact dyadic, exactly."""
    return x.frac()


@dataclass(frozen=True)
class UnitFixed:
    """A unit-interval value together with a bound on |stored - true|.

    value is an exact rational in [0, 1); error_radius is never silently
    dropped by any consumer in this package.
    """

    value: Fraction
    error_radius: Fraction = Fraction(0)

    def __post_init__(self):
        if not (0 <= self.value < 1):
            raise ValueError(f"UnitFixed value {self.value} outside [0, 1)")
        if self.error_radius < 0:
            raise ValueError("error_radius must be nonnegative")

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class BaseSpec:
    """A base lambda > 1: exact integer, exact rational, or a fixed-precision
    real approximation with a declared error bound.

    For the real kind, `value` is the declared approximation and `error` bounds
    |true - value|; the represented base must satisfy value - error > 1.
    """

    kind: str  # "integer" | "rational" | "real"
    value: Fraction
    error: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("integer", "rational", "real"):
            raise ValueError(f"unknown base kind {self.kind!r}")
        if self.kind != "real" and self.error != 0:
            raise ValueError("exact bases carry no error")
        if self.kind == "integer" and self.value.denominator != 1:
            raise ValueError("integer base with non-integer value")
        if self.value - self.error <= 1:
            raise ValueError(f"base must exceed 1 (got {self.value} +/- {self.error})")

    @classmethod
    def from_int(cls, k: int) -> "BaseSpec":
        return cls("integer", Fraction(k))

    @classmethod
    def from_rational(cls, num: int, den: int = 1) -> "BaseSpec":
        fr = Fraction(num, den)
        if fr.denominator == 1:
            return cls("integer", fr)
        return cls("rational", fr)

    @classmethod
    def from_real(cls, approx: Fraction, error: Fraction) -> "BaseSpec":
        return cls("real", Fraction(approx), Fraction(error))

    @property
    def is_exact(self) -> bool:
        return self.kind != "real"

    @property
    def integer(self) -> int | None:
        if self.value.denominator == 1 and self.is_exact:
            return self.value.numerator
        return None

    def lower(self) -> Fraction:
        return self.value - self.error

    def upper(self) -> Fraction:
        return self.value + self.error

    def __float__(self) -> float:
        return float(self.value)

    def power_of_two_exponent(self) -> int | None:
        """e such that the base equals 2^e exactly, else None."""
        if not self.is_exact or self.value.denominator != 1:
            return None
        v = self.value.numerator
        if v >= 2 and (v & (v - 1)) == 0:
            return v.bit_length() - 1
        return None

    def to_json(self) -> dict:
        if self.kind == "integer":
            return {"kind": "integer", "value": str(self.value.numerator)}
        if self.kind == "rational":
            return {
                "kind": "rational",
                "num": str(self.value.numerator),
                "den": str(self.value.denominator),
            }
        return {
            "kind": "real",
            "num": str(self.value.numerator),
            "den": str(self.value.denominator),
            "error_num": str(self.error.numerator),
            "error_den": str(self.error.denominator),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BaseSpec":
        kind = doc["kind"]
        if kind == "integer":
            return cls.from_int(int(doc["value"]))
        if kind == "rational":
            return cls.from_rational(int(doc["num"]), int(doc["den"]))
        if kind == "real":
            return cls.from_real(
                Fraction(int(doc["num"]), int(doc["den"])),
                Fraction(int(doc["error_num"]), int(doc["error_den"])),
            )
        raise ValueError(f"unknown base kind {kind!r}")


def _as_fraction(beta: RationalLike) -> Fraction:
    if isinstance(beta, Dyadic):
        return beta.to_fraction()
    return Fraction(beta)


def orbit_mod1(
    beta: RationalLike,
    base: BaseSpec,
    start_exp: int,
    count: int,
    precision_bits: int = 64,
) -> list[UnitFixed]:
    """Fractional parts {beta * lambda^(start_exp + x)} for x = 0..count-1.

    Integer bases: the orbit of a rational beta = p/den lives on the grid
    k/den, and each step is one modular multiply, so every point is exact
    (error_radius 0).  The jump to start_exp uses modular exponentiation, which
    agrees bit for bit with repeated multiply-then-reduce.

    Rational bases: exact fraction iteration (denominators grow linearly in
    the exponent; fine at the block sizes this package handles).

    Real bases: the declared [value - error, value + error] interval is
    propagated outward-exactly; raises PrecisionExhausted as soon as an
    interval straddles an integer (the fractional part stops being a single
    interval) or the final radii exceed 2^-precision_bits * count.
    """
    if count < 0 or start_exp < 0:
        raise ValueError("start_exp and count must be nonnegative")
    b = _as_fraction(beta)

    if base.kind == "integer":
        lam = base.value.numerator
        den = b.denominator
        num = (b.numerator % den) * pow(lam, start_exp, den) % den
        out = []
        for _ in range(count):
            out.append(UnitFixed(Fraction(num, den)))
            num = (num * lam) % den
        return out

    if base.kind == "rational":
        p, q = base.value.numerator, base.value.denominator
        v = (b * base.value**start_exp) % 1
        out = []
        for _ in range(count):
            out.append(UnitFixed(v))
            v = (v * p / q) % 1
        return out

    # Real kind: certified interval walk from exponent 0; the value held at
    # the top of iteration x is the interval for {beta * lambda^x}.
    lo_l, hi_l = base.lower(), base.upper()
    lo = hi = b % 1
    budget = Fraction(1, 2**precision_bits) * max(count, 1)
    out = []
    for x in range(start_exp + count):
        if x >= start_exp:
            radius = (hi - lo) / 2
            if radius > budget:
                raise PrecisionExhausted(
                    f"error radius {float(radius):.3e} exceeds the"
                    f" 2^-{precision_bits} * count budget at exponent {x}"
                )
            out.append(UnitFixed((lo + hi) / 2, radius))
            if len(out) == count:
                break
        lo, hi = lo * lo_l, hi * hi_l
        fl = lo.numerator // lo.denominator
        if fl != hi.numerator // hi.denominator:
            raise PrecisionExhausted(
                f"orbit interval straddles an integer at exponent {x + 1}; "
                "a tighter base approximation is required"
            )
        lo -= fl
        hi -= fl
    return out


def unit_exp(theta) -> tuple[float, float]:
    """(cos 2 pi theta, sin 2 pi theta) from an exactly reduced theta in [0, 1).

    This is the only exact-to-double handoff in the package; the inputs are
    already reduced mod 1 so no argument-reduction error can accumulate.
    """
    if isinstance(theta, UnitFixed):
        t = float(theta.value)
    elif isinstance(theta, (Fraction, Dyadic)):
        t = float(theta)
    else:
        t = float(theta)
    if not (0.0 <= t < 1.0):
        raise ValueError(f"theta {t} outside [0, 1)")
    a = TWO_PI * t
    return math.cos(a), math.sin(a)
