"""Exponential sums over one orbit block and the bounds they are tested against.

For a step r, base index j, and candidate c, the block sum is

    S(m1, m2, c) = sum_{x < tau} e(2 pi i (m1 * {beta lambda^(n+x)} + m2 x / tau))

with beta = alpha_r + c / (2^n_r q_r), n = n_rj, and the weighted aggregate

    D(c) = sum' |S(m1, m2, c)| / (max(1,|m1|) max(1,|m2|))

over |m1|, |m2| <= A, the prime excluding (0, 0).  The candidate search accepts
the least c with D(c) below the existence bound

    2 (lambda/(lambda-1))^(3/2) sqrt(tau) (3 + ln tau)^2 omega(r)

(Levin's Lemma 2 form; the mean-square Lemma 1 bound drops the last two
factors).  Phases are reduced mod 1 in exact rational arithmetic before any
trigonometric call, so the only floating-point error in S is one ulp per term.

The evaluation of D exploits S(-m1, -m2, c) = conj(S(m1, m2, c)): only the
half-plane m1 > 0 (plus m1 = 0, m2 > 0) is computed and each value is counted
twice.  Operation counters nevertheless report the number of S values the sum
consumes, (2A+1)^2 - 1 for a full D, which is the unit the idealized
real-arithmetic cost model counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .dyadic import Dyadic, UnitFixed, orbit_mod1, TWO_PI
from .errors import BudgetExceeded
from .schedule import Schedule


# Certification demanded of orbit points feeding trigonometric sums: phase
# errors below 2^-48 per point are invisible next to bounds carrying
# (3 + ln tau)^2 slack, and real-kind bases declared to ~2^-200 still certify.
ORBIT_PHASE_BITS = 48


@dataclass(frozen=True)
class BoundSet:
    """The two per-(r, j) thresholds: mean-square (lemma1) and existence
    (lemma2, carrying the (3 + ln tau)^2 omega(r) factors)."""

    lemma1_bound: float
    lemma2_bound: float


def bounds_for(r: int, j: int, schedule: Schedule) -> BoundSet:
    lam = schedule.base_fraction(j)
    ratio = float(lam / (lam - 1))  # exact rational, then one correct rounding
    tau = schedule.tau(r, j)
    b1 = 2.0 * ratio**1.5 * math.sqrt(tau)
    b2 = b1 * (3.0 + math.log(tau)) ** 2 * schedule.omega(r) if tau >= 1 else 0.0
    return BoundSet(b1, b2)


def strict_box_bound(r: int, j: int, schedule: Schedule) -> float:
    """The search threshold as stated in the construction loop itself, without
    the omega(r) factor; only the omega form is proven satisfiable, so a search
    against this one may exhaust its cap."""
    b = bounds_for(r, j, schedule)
    return b.lemma2_bound / schedule.omega(r)


class PhaseContext:
    """Exact orbit block for one (r, j, candidate) triple.

    The orbit is {beta lambda_j^(n_rj + x)} for x < tau_rj, held as exact
    rationals; regenerating the context reproduces identical values.
    """

    def __init__(self, schedule: Schedule, alpha_r: Dyadic, r: int, j: int, c: int):
        self.schedule = schedule
        self.r = r
        self.j = j
        self.c = c
        self.base = schedule.base(j)
        self.n_start = schedule.n_rj(r, j)
        self.tau = schedule.tau(r, j)
        self.A = schedule.A(r, j)
        self.beta = alpha_r + Dyadic(c, schedule.n(r) + schedule.log2_q(r))
        self.orbit: list[UnitFixed] = orbit_mod1(
            self.beta,
            self.base,
            self.n_start,
            self.tau,
            precision_bits=ORBIT_PHASE_BITS,
        )
        self._nums = [u.value.numerator for u in self.orbit]
        self._dens = [u.value.denominator for u in self.orbit]
        self._e1 = None  # rows m1 = 0..A of exp(2 pi i m1 theta_x)
        self._e2 = None  # tau-th roots of unity

    def phase(self, m1: int, m2: int, x: int) -> Fraction:
        """Exact mod-1 phase m1 * theta_x + m2 * x / tau."""
        num, den = self._nums[x], self._dens[x]
        p = Fraction((m1 * num) % den, den)
        if m2:
            p += Fraction((m2 * x) % self.tau, self.tau)
        return p % 1

    def _tables(self):
        if self._e1 is None:
            tau = self.tau
            e2 = [
                complex(math.cos(TWO_PI * k / tau), math.sin(TWO_PI * k / tau))
                for k in range(tau)
            ]
            e1 = []
            for m1 in range(self.A + 1):
                row = []
                for num, den in zip(self._nums, self._dens):
                    t = ((m1 * num) % den) / den
                    row.append(complex(math.cos(TWO_PI * t), math.sin(TWO_PI * t)))
                e1.append(row)
            self._e1, self._e2 = e1, e2
        return self._e1, self._e2

    def s_value(self, m1: int, m2: int) -> complex:
        """S(m1, m2, c) through the phase tables (m1 >= 0)."""
        e1, e2 = self._tables()
        tau = self.tau
        row = e1[m1]
        if m2 == 0:
            return sum(row, complex(0.0))
        acc = complex(0.0)
        for x in range(tau):
            acc += row[x] * e2[(m2 * x) % tau]
        return acc


def exp_sum_S(ctx: PhaseContext, m1: int, m2: int) -> complex:
    """Reference evaluation of S(m1, m2, c): every term's phase is reduced to
    [0, 1) in exact rational arithmetic, then handed to cos/sin once."""
    acc = complex(0.0)
    for x in range(ctx.tau):
        t = float(ctx.phase(m1, m2, x))
        acc += complex(math.cos(TWO_PI * t), math.sin(TWO_PI * t))
    return acc


@dataclass(frozen=True)
class DSumResult:
    value: float
    s_values: int  # S values the sum consumed (mirrored pairs included)
    aborted: bool


def disc_sum_D_detail(
    ctx: PhaseContext, abort_above: Optional[float] = None
) -> DSumResult:
    """The weighted aggregate D(c) with optional early abort.

    When abort_above is given, accumulation stops as soon as the running total
    exceeds it; the returned value is then a certified lower bound on D, which
    is all the candidate search needs to reject.
    """
    A, tau = ctx.A, ctx.tau
    if A == 0 or tau == 0:
        return DSumResult(0.0, 0, False)
    total = 0.0
    consumed = 0
    # Half-plane order: (0, 1..A), then (1..A, -A..A); each evaluated pair
    # stands for itself and its mirror.
    for m1 in range(0, A + 1):
        m2_range = range(1, A + 1) if m1 == 0 else range(-A, A + 1)
        w1 = max(1, m1)
        for m2 in m2_range:
            s = ctx.s_value(m1, m2)
            consumed += 2
            total += 2.0 * abs(s) / (w1 * max(1, abs(m2)))
            if abort_above is not None and total > abort_above:
                return DSumResult(total, consumed, True)
    return DSumResult(total, consumed, False)


def disc_sum_D(ctx: PhaseContext) -> float:
    """D(c), fully evaluated."""
    return disc_sum_D_detail(ctx).value


def full_pair_count(A: int) -> int:
    """Number of S values a full D consumes: (2A+1)^2 - 1."""
    return (2 * A + 1) ** 2 - 1


def mean_square_T(
    r: int,
    j: int,
    m1: int,
    m2: int,
    schedule: Schedule,
    alpha_r: Dyadic,
    budget: int = 4096,
) -> float:
    """sqrt((1/q_r) sum_c |S(m1, m2, c)|^2) by exact enumeration of all
    candidates c in [0, q_r); refuses when q_r exceeds the budget."""
    q = schedule.q(r)
    if q > budget:
        raise BudgetExceeded(f"q_{r} = {q} exceeds the enumeration budget {budget}")
    mm1 = abs(m1)
    acc = 0.0
    for c in range(q):
        ctx = PhaseContext(schedule, alpha_r, r, j, c)
        s = ctx.s_value(mm1, m2 if m1 >= 0 else -m2)
        acc += abs(s) ** 2
    return math.sqrt(acc / q)


def mean_square_all_pairs(
    r: int,
    j: int,
    schedule: Schedule,
    alpha_r: Dyadic,
    budget: int = 4096,
) -> dict[tuple[int, int], float]:
    """T(m1, m2) for every admissible pair 0 < max(|m1|, |m2|) <= A in one
    sweep over c (one phase-table build per candidate instead of one per pair)."""
    q = schedule.q(r)
    if q > budget:
        raise BudgetExceeded(f"q_{r} = {q} exceeds the enumeration budget {budget}")
    A = schedule.A(r, j)
    half = [(0, m2) for m2 in range(1, A + 1)]
    half += [(m1, m2) for m1 in range(1, A + 1) for m2 in range(-A, A + 1)]
    sums = {pair: 0.0 for pair in half}
    for c in range(q):
        ctx = PhaseContext(schedule, alpha_r, r, j, c)
        for pair in half:
            sums[pair] += abs(ctx.s_value(*pair)) ** 2
    out = {}
    for (m1, m2), v in sums.items():
        t = math.sqrt(v / q)
        out[(m1, m2)] = t
        out[(-m1, -m2)] = t  # |S| is mirror-symmetric
    return out
