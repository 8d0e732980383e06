"""Index bookkeeping for the construction: the thresholds ell_k, the active
base count omega(P), the block parameters (n_r, q_r, n_rj, tau_rj, A_rj), and
the validity checks that separate schedules the construction's proof covers
from schedules it does not.

Floors and ceilings of logarithms here must be bit-exact: a floor off by one
shifts every downstream block boundary.  Bases that are powers of two take an
exact rational path; everything else goes through interval arithmetic whose
precision doubles until the floor or ceiling is certified, with an exact
witness check whenever the interval straddles an integer.
"""

from __future__ import annotations

import json
import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import mpmath
from mpmath import iv

from .dyadic import BaseSpec, Dyadic
from .errors import PrecisionExhausted, ScheduleError, UnrecognizedRule

_PREC_LADDER = (64, 128, 256, 512, 1024, 2048, 4096)
DEFAULT_PRECISION_BUDGET = 4096


_IV_LOCK = threading.Lock()


@contextmanager
def _iv_prec(prec: int):
    # iv.prec is process-global mpmath state: serialize certified computations
    # (search workers normally hit the memo table and never reach this).
    with _IV_LOCK:
        old = iv.prec
        iv.prec = prec
        try:
            yield
        finally:
            iv.prec = old


def _iv_interval(base: BaseSpec):
    """Rigorous mpmath interval enclosing the base value (at current iv.prec)."""
    mid = iv.mpf(base.value.numerator) / iv.mpf(base.value.denominator)
    if base.error:
        err = iv.mpf(base.error.numerator) / iv.mpf(base.error.denominator)
        mid = mid + iv.mpf([-1, 1]) * err
    return mid


def certified_floor_mul_log2_over_log(n: int, base: BaseSpec, budget: int) -> int:
    """floor(n * log_base(2)), certified.

    Exact when the base is 2^e; otherwise interval escalation.  The escalation
    can only fail to separate if n * log_base(2) is an integer, which for a
    rational base requires the base to be a power of two (already handled), so
    hitting the budget signals a genuinely hard real-kind base.
    """
    e = base.power_of_two_exponent()
    if e is not None:
        return n // e
    for prec in _PREC_LADDER:
        if prec > budget:
            break
        with _iv_prec(max(prec, n.bit_length() + 16)):
            lam = _iv_interval(base)
            y = iv.mpf(n) * iv.log(iv.mpf(2)) / iv.log(lam)
            lo = int(mpmath.floor(y.a))
            hi = int(mpmath.floor(y.b))
        if lo == hi:
            return lo
    raise PrecisionExhausted(
        f"floor({n} * log_base 2) not separable within {budget} bits"
    )


def _pow_equals(fr: Fraction, exp: int, target: Fraction) -> bool:
    # Guarded exact power comparison; exp stays tiny in practice.
    if exp > 64 or exp * max(fr.numerator.bit_length(), fr.denominator.bit_length()) > 10**6:
        return False
    return fr**exp == target


def certified_ceil_abs_log2_log2(base: BaseSpec, budget: int) -> int:
    """ceil(|log2 log2 base|), certified.

    A straddled integer m is resolved exactly through its witness equation:
    base = 2^(2^m) on the base > 2 side, base^(2^m) = 2 on the base < 2 side.
    """
    if base.is_exact and base.value == 2:
        return 0
    e = base.power_of_two_exponent()
    if e is not None and e >= 2 and (e & (e - 1)) == 0:
        return e.bit_length() - 1  # base = 2^(2^m): value is exactly m
    for prec in _PREC_LADDER:
        if prec > budget:
            break
        with _iv_prec(prec):
            lam = _iv_interval(base)
            ln2 = iv.log(iv.mpf(2))
            # The sign of log2 log2 lambda is the sign of (lambda - 2).
            if base.is_exact:
                negate = base.value < 2
            elif base.upper() < 2:
                negate = True
            elif base.lower() > 2:
                negate = False
            else:
                continue  # real-kind interval straddles 2; escalate
            u = iv.log(iv.log(lam) / ln2) / ln2
            if negate:
                u = -u
            lo = int(mpmath.ceil(u.a))
            hi = int(mpmath.ceil(u.b))
        if lo == hi:
            return lo
        if hi == lo + 1 and base.is_exact:
            m = lo  # candidate exact integer value |u| == lo
            if m >= 0:
                if base.value > 2 and m <= 6 and base.value == Fraction(2) ** (2**m):
                    return m
                if base.value < 2 and _pow_equals(base.value, 2**m, Fraction(2)):
                    return m
    raise PrecisionExhausted(
        f"ceil(|log2 log2 {base.value}|) not separable within {budget} bits"
    )


class BaseSequence:
    """The base sequence (lambda_j): either lambda_j = j + 1 or an explicit list."""

    INTEGERS_FROM_TWO = "integers-from-two"
    EXPLICIT = "explicit"

    def __init__(self, kind: str, items: Optional[list[BaseSpec]] = None):
        if kind not in (self.INTEGERS_FROM_TWO, self.EXPLICIT):
            raise ScheduleError(f"unknown base sequence kind {kind!r}")
        if kind == self.EXPLICIT:
            if not items:
                raise ScheduleError("explicit base sequence needs at least one base")
        self.kind = kind
        self.items = list(items) if items else None

    @classmethod
    def integers_from_two(cls) -> "BaseSequence":
        return cls(cls.INTEGERS_FROM_TWO)

    @classmethod
    def explicit(cls, items: list[BaseSpec]) -> "BaseSequence":
        return cls(cls.EXPLICIT, items)

    def base(self, j: int) -> BaseSpec:
        if j < 1:
            raise ScheduleError("base index j starts at 1")
        if self.kind == self.INTEGERS_FROM_TWO:
            return BaseSpec.from_int(j + 1)
        if j > len(self.items):
            raise ScheduleError(f"base sequence has only {len(self.items)} entries")
        return self.items[j - 1]

    def known_length(self) -> Optional[int]:
        return None if self.kind == self.INTEGERS_FROM_TWO else len(self.items)

    def to_json(self) -> dict:
        if self.kind == self.INTEGERS_FROM_TWO:
            return {"kind": self.kind}
        return {"kind": self.kind, "items": [b.to_json() for b in self.items]}

    @classmethod
    def from_json(cls, doc: dict) -> "BaseSequence":
        if doc["kind"] == cls.INTEGERS_FROM_TWO:
            return cls.integers_from_two()
        return cls.explicit([BaseSpec.from_json(d) for d in doc["items"]])


class SpeedSequence:
    """The speed sequence (t_j): powers of two or an explicit increasing list."""

    POWERS_OF_TWO = "powers-of-two"
    EXPLICIT = "explicit"

    def __init__(self, kind: str, items: Optional[list[int]] = None):
        if kind not in (self.POWERS_OF_TWO, self.EXPLICIT):
            raise ScheduleError(f"unknown speed sequence kind {kind!r}")
        if kind == self.EXPLICIT:
            if not items:
                raise ScheduleError("explicit speed sequence needs at least one entry")
            if any(b <= a for a, b in zip(items, items[1:])) or items[0] < 1:
                raise ScheduleError("speeds must be strictly increasing positive integers")
        self.kind = kind
        self.items = list(items) if items else None

    @classmethod
    def powers_of_two(cls) -> "SpeedSequence":
        return cls(cls.POWERS_OF_TWO)

    @classmethod
    def explicit(cls, items: list[int]) -> "SpeedSequence":
        return cls(cls.EXPLICIT, items)

    def t(self, j: int) -> int:
        if j < 1:
            raise ScheduleError("speed index j starts at 1")
        if self.kind == self.POWERS_OF_TWO:
            return 1 << j
        if j > len(self.items):
            raise ScheduleError(f"speed sequence has only {len(self.items)} entries")
        return self.items[j - 1]

    def known_length(self) -> Optional[int]:
        return None if self.kind == self.POWERS_OF_TWO else len(self.items)

    def to_json(self) -> dict:
        if self.kind == self.POWERS_OF_TWO:
            return {"kind": self.kind}
        return {"kind": self.kind, "items": [str(t) for t in self.items]}

    @classmethod
    def from_json(cls, doc: dict) -> "SpeedSequence":
        if doc["kind"] == cls.POWERS_OF_TWO:
            return cls.powers_of_two()
        return cls.explicit([int(t) for t in doc["items"]])


def _ceil_log2(x: int) -> int:
    if x < 1:
        raise ValueError("ceil_log2 needs a positive integer")
    return (x - 1).bit_length()


@dataclass(frozen=True)
class NRule:
    """Block-length rule n_r.  original: 2^r - 2; quadratic: r^2; polynomial:
    sum of coeffs[i] * r^i; table: explicit values for r = 1, 2, ...."""

    kind: str  # "original" | "quadratic" | "polynomial" | "table"
    coeffs: tuple[int, ...] = ()
    table: tuple[int, ...] = ()

    ORIGINAL = "original"
    QUADRATIC = "quadratic"
    POLYNOMIAL = "polynomial"
    TABLE = "table"

    def __post_init__(self):
        if self.kind not in (self.ORIGINAL, self.QUADRATIC, self.POLYNOMIAL, self.TABLE):
            raise ScheduleError(f"unknown n rule {self.kind!r}")
        if self.kind == self.POLYNOMIAL and not self.coeffs:
            raise ScheduleError("polynomial n rule needs coefficients")
        if self.kind == self.TABLE:
            if len(self.table) < 2 or any(
                b <= a for a, b in zip(self.table, self.table[1:])
            ):
                raise ScheduleError("table n rule must be strictly increasing")

    def value(self, r: int) -> int:
        if r < 1:
            raise ScheduleError("step index r starts at 1")
        if self.kind == self.ORIGINAL:
            return (1 << r) - 2
        if self.kind == self.QUADRATIC:
            return r * r
        if self.kind == self.POLYNOMIAL:
            acc, p = 0, 1
            for c in self.coeffs:
                acc += c * p
                p *= r
            return acc
        if r > len(self.table):
            raise ScheduleError(f"n table has only {len(self.table)} entries")
        return self.table[r - 1]

    def degree(self) -> Optional[int]:
        if self.kind == self.QUADRATIC:
            return 2
        if self.kind == self.POLYNOMIAL:
            d = len(self.coeffs) - 1
            while d > 0 and self.coeffs[d] == 0:
                d -= 1
            return d
        return None

    def to_json(self) -> dict:
        if self.kind == self.POLYNOMIAL:
            return {"kind": self.kind, "coeffs": [str(c) for c in self.coeffs]}
        if self.kind == self.TABLE:
            return {"kind": self.kind, "values": [str(v) for v in self.table]}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, doc: dict) -> "NRule":
        kind = doc["kind"]
        if kind == cls.POLYNOMIAL:
            return cls(kind, coeffs=tuple(int(c) for c in doc["coeffs"]))
        if kind == cls.TABLE:
            return cls(kind, table=tuple(int(v) for v in doc["values"]))
        return cls(kind)


@dataclass(frozen=True)
class QRule:
    """Denominator rule, always a power of two (q_r = 2^log2_value).

    original: log2 q_r = 2^r + r + 1.
    derived: log2 q_r = d + 1 + ceil(log2(d + 1)) with d = n_{r+1} - n_r, the
    standard choice satisfying the sufficient condition with margin.
    table: explicit log2 values.
    """

    kind: str  # "original" | "derived" | "table"
    log2_table: tuple[int, ...] = ()

    ORIGINAL = "original"
    DERIVED = "derived"
    TABLE = "table"

    def __post_init__(self):
        if self.kind not in (self.ORIGINAL, self.DERIVED, self.TABLE):
            raise ScheduleError(f"unknown q rule {self.kind!r}")
        if self.kind == self.TABLE and (
            not self.log2_table or any(v < 1 for v in self.log2_table)
        ):
            raise ScheduleError("q table needs log2 values >= 1")

    def log2_value(self, r: int, n_rule: NRule) -> int:
        if r < 1:
            raise ScheduleError("step index r starts at 1")
        if self.kind == self.ORIGINAL:
            return (1 << r) + r + 1
        if self.kind == self.DERIVED:
            d = n_rule.value(r + 1) - n_rule.value(r)
            return d + 1 + _ceil_log2(d + 1)
        if r > len(self.log2_table):
            raise ScheduleError(f"q table has only {len(self.log2_table)} entries")
        return self.log2_table[r - 1]

    def is_bounded(self) -> bool:
        # Only an explicit constant table is treated as bounded; the built-in
        # rules grow without bound.
        return self.kind == self.TABLE and len(set(self.log2_table)) == 1

    def to_json(self) -> dict:
        if self.kind == self.TABLE:
            return {"kind": self.kind, "log2_values": [str(v) for v in self.log2_table]}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, doc: dict) -> "QRule":
        if doc["kind"] == cls.TABLE:
            return cls(doc["kind"], log2_table=tuple(int(v) for v in doc["log2_values"]))
        return cls(doc["kind"])


SCHEDULE_SCHEMA = {
    "type": "object",
    "required": ["bases", "speeds", "start_value", "n_rule", "q_rule"],
    "additionalProperties": False,
    "properties": {
        "bases": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["integers-from-two", "explicit"]},
                "items": {"type": "array"},
            },
        },
        "speeds": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["powers-of-two", "explicit"]},
                "items": {"type": "array", "items": {"type": "string"}},
            },
        },
        "start_value": {
            "type": "object",
            "required": ["num", "scale"],
            "properties": {
                "num": {"type": "string", "pattern": "^[0-9]+$"},
                "scale": {"type": "integer", "minimum": 0},
            },
        },
        "n_rule": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["original", "quadratic", "polynomial", "table"]},
                "coeffs": {"type": "array", "items": {"type": "string"}},
                "values": {"type": "array", "items": {"type": "string"}},
            },
        },
        "q_rule": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["original", "derived", "table"]},
                "log2_values": {"type": "array", "items": {"type": "string"}},
            },
        },
    },
}


class Schedule:
    """A complete parameterization of the construction: bases, speeds, start
    value, and the (n_r, q_r) rules, with a memo table for the derived indices.

    The memo table is the only mutable state; it is guarded by a lock so
    concurrent readers see consistent entries, and a cache hit always equals a
    recomputation from scratch.
    """

    def __init__(
        self,
        bases: BaseSequence,
        speeds: SpeedSequence,
        start: Dyadic = Dyadic(0),
        n_rule: NRule = NRule(NRule.ORIGINAL),
        q_rule: QRule = QRule(QRule.ORIGINAL),
        precision_budget: int = DEFAULT_PRECISION_BUDGET,
    ):
        if start < 0:
            raise ScheduleError("start value must be nonnegative")
        self.bases = bases
        self.speeds = speeds
        self.start = start
        self.n_rule = n_rule
        self.q_rule = q_rule
        self.precision_budget = precision_budget
        self._memo: dict = {}
        self._lock = threading.Lock()

    @classmethod
    def corollary(
        cls,
        n_rule: NRule = NRule(NRule.ORIGINAL),
        q_rule: QRule = QRule(QRule.ORIGINAL),
        start: Dyadic = Dyadic(0),
        precision_budget: int = DEFAULT_PRECISION_BUDGET,
    ) -> "Schedule":
        """lambda_j = j + 1 and t_j = 2^j, the configuration that yields a
        number normal to every integer base."""
        return cls(
            BaseSequence.integers_from_two(),
            SpeedSequence.powers_of_two(),
            start,
            n_rule,
            q_rule,
            precision_budget,
        )

    def _memoized(self, key, fn: Callable):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        val = fn()
        with self._lock:
            self._memo.setdefault(key, val)
        return val

    # -- sequence accessors --------------------------------------------------

    def base(self, j: int) -> BaseSpec:
        return self.bases.base(j)

    def base_fraction(self, j: int) -> Fraction:
        return self.bases.base(j).value

    def base_float(self, j: int) -> float:
        return float(self.bases.base(j).value)

    def n(self, r: int) -> int:
        return self.n_rule.value(r)

    def log2_q(self, r: int) -> int:
        return self.q_rule.log2_value(r, self.n_rule)

    def q(self, r: int) -> int:
        L = self.log2_q(r)
        if L > (1 << 26):
            raise ScheduleError(
                f"q at step {r} has {L} bits; too large to materialize, use log2_q"
            )
        return 1 << L

    # -- thresholds ----------------------------------------------------------

    def ell(self, k: int) -> int:
        """ell_k = max(t_k, max over v <= k of 2 ceil(|log2 log2 lambda_v|) + 5)."""
        if k < 1:
            raise ScheduleError("ell index starts at 1")
        return self._memoized(("ell", k), lambda: self._ell(k))

    def _ell(self, k: int) -> int:
        inner = max(
            2 * certified_ceil_abs_log2_log2(self.base(v), self.precision_budget) + 5
            for v in range(1, k + 1)
        )
        return max(self.speeds.t(k), inner)

    def max_supported_j(self) -> Optional[int]:
        lengths = [
            n for n in (self.bases.known_length(), self.speeds.known_length()) if n
        ]
        return min(lengths) if lengths else None

    def omega(self, P: int) -> int:
        """Number of active bases at position P: 1 on [1, ell_2), else the k
        with ell_k <= P < ell_{k+1} (the largest such k when thresholds repeat)."""
        if P < 1:
            raise ScheduleError("omega needs P >= 1")
        return self._memoized(("omega", P), lambda: self._omega(P))

    def _omega(self, P: int) -> int:
        cap = self.max_supported_j()
        k = 1
        while True:
            if cap is not None and k + 1 > cap:
                return k
            if self.ell(k + 1) <= P:
                k += 1
            else:
                return k

    # -- per-base block indices ----------------------------------------------

    def n_rj(self, r: int, j: int) -> int:
        """floor(n_r * log_{lambda_j} 2), certified."""
        return self._memoized(
            ("n_rj", r, j),
            lambda: certified_floor_mul_log2_over_log(
                self.n(r), self.base(j), self.precision_budget
            ),
        )

    def tau(self, r: int, j: int) -> int:
        return self.n_rj(r + 1, j) - self.n_rj(r, j)

    def A(self, r: int, j: int) -> int:
        return math.isqrt(self.tau(r, j))

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "bases": self.bases.to_json(),
            "speeds": self.speeds.to_json(),
            "start_value": {"num": str(self.start.num), "scale": self.start.scale},
            "n_rule": self.n_rule.to_json(),
            "q_rule": self.q_rule.to_json(),
        }

    @classmethod
    def from_json(
        cls, doc: dict, precision_budget: int = DEFAULT_PRECISION_BUDGET
    ) -> "Schedule":
        import jsonschema

        try:
            jsonschema.validate(doc, SCHEDULE_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ScheduleError(f"schedule document rejected: {exc.message}") from exc
        return cls(
            BaseSequence.from_json(doc["bases"]),
            SpeedSequence.from_json(doc["speeds"]),
            Dyadic(int(doc["start_value"]["num"]), int(doc["start_value"]["scale"])),
            NRule.from_json(doc["n_rule"]),
            QRule.from_json(doc["q_rule"]),
            precision_budget,
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, precision_budget: int = DEFAULT_PRECISION_BUDGET) -> "Schedule":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh), precision_budget)


# -- validity checks -----------------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    r: int
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class CheckReport:
    name: str
    items: tuple[CheckItem, ...]
    ok: bool
    reason: str = ""


def check_q_sufficient(schedule: Schedule, r_max: int) -> CheckReport:
    """Sufficient condition for the mean-square bound to hold at every step
    (Levin's Lemma 1 hypothesis made schedule-generic):

        2^(d + 1 + (1/2) log2(d + 1)) <= q_r,   d = n_{r+1} - n_r,

    evaluated exactly as d + 1 <= 4^(L - d - 1) with L = log2 q_r."""
    items = []
    for r in range(1, r_max + 1):
        d = schedule.n(r + 1) - schedule.n(r)
        L = schedule.log2_q(r)
        k = L - d - 1
        ok = k >= 0 and (d + 1) <= (1 << (2 * k))
        items.append(CheckItem(r, ok, f"d={d} log2_q={L}"))
    ok = all(i.ok for i in items)
    return CheckReport("q-sufficient", tuple(items), ok, "" if ok else "condition violated")


def check_q_necessary(schedule: Schedule, r_max: int) -> CheckReport:
    """Necessary condition q_r > 2^(n_{r+1} - n_r) for unbounded q_r, plus the
    bounded-q_r refusal (a bounded q_r with log2 q_r <= n_{r+1} - n_r forces
    linear n_r, whose discrepancy bound does not go to zero)."""
    items = []
    bounded = schedule.q_rule.is_bounded()
    bounded_hit = False
    for r in range(1, r_max + 1):
        d = schedule.n(r + 1) - schedule.n(r)
        L = schedule.log2_q(r)
        ok = L > d
        if bounded and L <= d:
            bounded_hit = True
        items.append(CheckItem(r, ok, f"log2_q={L} d={d}"))
    ok = all(i.ok for i in items) and not bounded_hit
    reason = ""
    if bounded_hit or (bounded and not ok):
        reason = "bounded q_r"
    elif not ok:
        reason = "q_r <= 2^(n_{r+1} - n_r)"
    return CheckReport("q-necessary", tuple(items), ok, reason)


@dataclass(frozen=True)
class GrowthClass:
    kind: str  # "non-normal-linear" | "polynomial-degree-h" | "exponential"
    degree: Optional[int]
    discrepancy_exponent: Optional[Fraction]
    bound_template: str
    normal: bool


def classify_growth(schedule: Schedule) -> GrowthClass:
    """Classify the n_r rule and give the discrepancy-bound shape the proof
    yields: linear does not go to 0, r^h gives P^-((h-1)/2h), 2^r - 2 gives
    P^-(1/2).  Explicit tables are not classified."""
    rule = schedule.n_rule
    if rule.kind == NRule.ORIGINAL:
        return GrowthClass(
            "exponential",
            None,
            Fraction(1, 2),
            "O(log(P)^2 omega(P) / P^(1/2))",
            True,
        )
    h = rule.degree()
    if h is None:
        raise UnrecognizedRule("explicit n tables are not classified")
    if h <= 1:
        return GrowthClass(
            "non-normal-linear",
            h,
            None,
            "O(log(P)^2 omega(P)) -- does not go to 0",
            False,
        )
    expo = Fraction(h - 1, 2 * h)
    return GrowthClass(
        "polynomial-degree-h",
        h,
        expo,
        f"O(log(P)^2 omega(P) / P^({expo}))",
        True,
    )


def concatenation_feasible(schedule: Schedule, r_max: int) -> CheckReport:
    """Whether the construction could be run as plain concatenation of the a_r
    blocks: sum_(m < r) log2 q_m <= n_r (non-strict), checked for r >= 2.

    Any schedule with log2 q_r > n_{r+1} - n_r (the necessary condition above)
    fails this for every r, which is why overlapping carries are inherent."""
    items = []
    acc = 0
    for r in range(2, r_max + 1):
        acc += schedule.log2_q(r - 1)
        items.append(CheckItem(r, acc <= schedule.n(r), f"sum={acc} n_r={schedule.n(r)}"))
    ok = all(i.ok for i in items)
    return CheckReport("concatenation", tuple(items), ok, "" if ok else "blocks overlap")
