"""Equidistribution measurements and the computable bounds they are compared to.

The star discrepancy of points xi_0..xi_{P-1} in [0, 1) is

    D(P) = sup over gamma in (0, 1] of |#{x : xi_x < gamma} / P - gamma|,

computed here exactly from the sorted points.  The two-dimensional analogue
(over boxes [0, gamma1) x [0, gamma2)) is a budgeted brute force used to check
the Erdos-Turan-Koksma inequality (Koksma 1950 form, constant 30^s) at small
scale.  The per-step proof-chain check replays the counting inequality that
the construction's discrepancy theorem extracts from an accepted candidate,
with its 30^2 * 15 constant; it is numerically vacuous at desk scale (the
right side dwarfs tau) but is asserted anyway, from certified counts only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .champernowne import champernowne_fraction
from .construction import ConstructionState, tail_bound
from .dyadic import BaseSpec, UnitFixed, orbit_mod1
from .errors import BudgetExceeded, InsufficientPrecision, PrecisionExhausted
from .expsums import ORBIT_PHASE_BITS
from .schedule import Schedule


@dataclass(frozen=True)
class OrbitPoints:
    """A finite orbit {alpha lambda^x} with its provenance and the largest
    certified error radius among the points."""

    points: tuple[UnitFixed, ...]
    label: str
    base: Fraction
    start_exp: int

    def __len__(self):
        return len(self.points)

    @property
    def max_error_radius(self) -> Fraction:
        return max((p.error_radius for p in self.points), default=Fraction(0))


@dataclass(frozen=True)
class PairPoints:
    """Points ({x / tau}, {alpha lambda^(n + x)}) in the unit square."""

    pairs: tuple[tuple[Fraction, Fraction], ...]

    def __len__(self):
        return len(self.pairs)


def orbit_points(
    alpha,
    base: BaseSpec,
    start_exp: int,
    count: int,
    value_tail: Fraction = Fraction(0),
    label: str = "",
    precision_bits: int = 64,
) -> OrbitPoints:
    """Orbit of an exact alpha known to lie in [alpha, alpha + value_tail].

    The stored points are the exact orbit of alpha; each point's radius is the
    tail amplified by lambda^(start_exp + x).  A point whose interval reaches 1
    would wrap, so the build fails with InsufficientPrecision rather than emit
    an uncertifiable point.
    """
    raw = orbit_mod1(alpha, base, start_exp, count, precision_bits=precision_bits)
    if value_tail == 0:
        return OrbitPoints(tuple(raw), label, base.value, start_exp)
    lam = base.value
    width = value_tail * lam**start_exp
    pts = []
    for x, u in enumerate(raw):
        w = u.error_radius + width
        if u.value + w >= 1:
            raise InsufficientPrecision(
                f"orbit point {x} may wrap past 1 (radius {float(w):.3e}); "
                "run the construction deeper"
            )
        pts.append(UnitFixed(u.value, w))
        width *= lam
    return OrbitPoints(tuple(pts), label, base.value, start_exp)


def _point_values(pts) -> list[Fraction]:
    if isinstance(pts, OrbitPoints):
        seq = pts.points
    else:
        seq = pts
    out = []
    for p in seq:
        out.append(p.value if isinstance(p, UnitFixed) else Fraction(p))
    return out


def star_discrepancy_exact(pts) -> Fraction:
    """Exact star discrepancy of the stored point values.

    With the points sorted, the supremum over gamma is attained at a point
    coordinate from one side or the other, which collapses to the classical
    two-term maximum per sorted position.
    """
    values = sorted(_point_values(pts))
    P = len(values)
    if P < 1:
        raise ValueError("star discrepancy needs at least one point")
    best = Fraction(0)
    for i, x in enumerate(values):
        hi = Fraction(i + 1, P) - x
        lo = x - Fraction(i, P)
        if hi > best:
            best = hi
        if lo > best:
            best = lo
    return best


def star_discrepancy(pts) -> float:
    """Float view of the exact star discrepancy; the measurement error is at
    most the points' max_error_radius."""
    return float(star_discrepancy_exact(pts))


def _certified_count_below(points: Sequence[UnitFixed], gamma: Fraction) -> int:
    """#{x : true point < gamma}, certifiable only when no point's interval
    touches gamma (or wraps past 1)."""
    n = 0
    for x, p in enumerate(points):
        r = p.error_radius
        if r and p.value + r >= 1:
            raise PrecisionExhausted(f"point {x} may wrap past 1")
        if p.value + r < gamma:
            n += 1
        elif p.value - r >= gamma:
            pass
        else:
            raise PrecisionExhausted(
                f"point {x} ties gamma {gamma} within its error radius"
            )
    return n


def counting_N(
    xi,
    base: BaseSpec,
    gamma: Fraction,
    Q: int,
    P: int,
    precision_bits: int = 64,
) -> int:
    """Number of x in [Q, Q + P) with {xi lambda^x} < gamma, exactly."""
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if gamma == 1:
        return P
    pts = orbit_mod1(xi, base, Q, P, precision_bits=precision_bits)
    return _certified_count_below(pts, gamma)


def discrepancy_2d(pairs, budget: int = 4096) -> float:
    """Two-dimensional star discrepancy over boxes [0, g1) x [0, g2), exact
    brute force over the coordinate grid with both one-sided limits.

    Exists to validate the Koksma-type bound at small scale; the cost is
    quadratic in the number of distinct coordinates and guarded by the budget.
    """
    if isinstance(pairs, PairPoints):
        pairs = pairs.pairs
    P = len(pairs)
    if P < 1:
        raise ValueError("discrepancy_2d needs at least one pair")
    if P > budget:
        raise BudgetExceeded(f"{P} pairs exceed the brute-force budget {budget}")
    one = Fraction(1)
    us = sorted({Fraction(u) for u, _ in pairs} | {one})
    vs = sorted({Fraction(v) for _, v in pairs} | {one})
    nu, nv = len(us), len(vs)
    if nu * nv > 1 << 22:
        raise BudgetExceeded("coordinate grid too large for the exact brute force")
    iu = {u: i for i, u in enumerate(us)}
    ivx = {v: i for i, v in enumerate(vs)}
    cells = [[0] * nv for _ in range(nu)]
    for u, v in pairs:
        cells[iu[Fraction(u)]][ivx[Fraction(v)]] += 1
    # pre[i][j] = number of points with coordinate indices < (i, j)
    pre = [[0] * (nv + 1) for _ in range(nu + 1)]
    for i in range(nu):
        rowsum = 0
        row = cells[i]
        for j in range(nv):
            rowsum += row[j]
            pre[i + 1][j + 1] = pre[i][j + 1] + rowsum
    best = Fraction(0)
    for i, gu in enumerate(us):
        for j, gv in enumerate(vs):
            area = gu * gv
            # Both one-sided limits in each coordinate: counts with < and <=.
            for n in (pre[i][j], pre[i + 1][j + 1], pre[i + 1][j], pre[i][j + 1]):
                val = Fraction(n, P) - area
                if val < 0:
                    val = -val
                if val > best:
                    best = val
    return float(best)


def etk_bound(P: int, n: int, sums: dict[tuple[int, int], float]) -> float:
    """Right-hand side of the two-dimensional Erdos-Turan-Koksma inequality:

        30^2 (1/n + (1/P) sum' |S(m1, m2)| / (max(1,|m1|) max(1,|m2|)))

    where `sums` maps (m1, m2) to |sum_x e(2 pi i (m1 b1_x + m2 b2_x))| and the
    (0, 0) term is excluded."""
    if n < 1:
        raise ValueError("n must be >= 1")
    acc = 0.0
    for (m1, m2), s in sums.items():
        if m1 == 0 and m2 == 0:
            continue
        acc += abs(s) / (max(1, abs(m1)) * max(1, abs(m2)))
    return 900.0 * (1.0 / n + acc / P)


def step_exponential_sums(
    state: ConstructionState, r: int, j: int
) -> dict[tuple[int, int], float]:
    """|S| over the accepted step's block, evaluated at the deepest alpha the
    state holds (the limit's orbit up to the certified tail)."""
    from .expsums import PhaseContext  # local to avoid cycle at import time

    sched = state.schedule
    ctx = PhaseContext(sched, state.alpha, r, j, 0)
    A = sched.A(r, j)
    out = {}
    for m1 in range(0, A + 1):
        for m2 in range(-A, A + 1):
            if m1 == 0 and m2 <= 0:
                continue
            v = abs(ctx.s_value(m1, m2))
            out[(m1, m2)] = v
            out[(-m1, -m2)] = v
    return out


def pair_points_for_step(state: ConstructionState, r: int, j: int) -> PairPoints:
    """({x / tau}, {alpha lambda^(n + x)}) for the step's block, from the exact
    held alpha."""
    sched = state.schedule
    tau = sched.tau(r, j)
    pts = orbit_mod1(state.alpha, sched.base(j), sched.n_rj(r, j), tau)
    return PairPoints(
        tuple((Fraction(x, tau), pts[x].value) for x in range(tau))
    )


@dataclass(frozen=True)
class ProofChainItem:
    gamma: Fraction
    count: int
    lhs: float
    rhs: float
    ok: bool


@dataclass(frozen=True)
class ProofChainResult:
    r: int
    j: int
    items: tuple[ProofChainItem, ...]
    ok: bool


def proof_chain_check(
    state: ConstructionState, r: int, j: int, gammas: Iterable[Fraction]
) -> ProofChainResult:
    """The counting inequality the discrepancy theorem derives per step:

        |N(n_rj, tau) - gamma tau| <= 30^2 * 15 * (lam/(lam-1))^(3/2)
                                      * sqrt(tau) (3 + ln tau)^2 omega(r)

    evaluated with certified counts from the deepest held alpha."""
    sched = state.schedule
    if r >= state.r:
        raise ValueError(f"step {r} has not completed (next step is {state.r})")
    if r < sched.ell(j):
        raise ValueError(f"proof chain needs r >= ell_j (= {sched.ell(j)})")
    tau = sched.tau(r, j)
    lam = sched.base_fraction(j)
    ratio = float(lam / (lam - 1))
    rhs = 900.0 * 15.0 * ratio**1.5 * math.sqrt(tau)
    rhs *= (3.0 + math.log(tau)) ** 2 * sched.omega(r)
    tail = tail_bound(state.r, sched).to_fraction()
    pts = orbit_points(
        state.alpha,
        sched.base(j),
        sched.n_rj(r, j),
        tau,
        value_tail=tail,
        precision_bits=ORBIT_PHASE_BITS,
    )
    items = []
    for g in gammas:
        g = Fraction(g)
        if g == 1:
            count = tau
        else:
            try:
                count = _certified_count_below(pts.points, g)
            except PrecisionExhausted as exc:
                raise InsufficientPrecision(str(exc)) from exc
        lhs = float(abs(Fraction(count) - g * tau))
        items.append(ProofChainItem(g, count, lhs, rhs, lhs <= rhs))
    return ProofChainResult(r, j, tuple(items), all(i.ok for i in items))


def corollary_bound(P: int, j: int) -> float:
    """Explicit discrepancy bound for {alpha j^x}, integer base j >= 2:

        2^(2j+1)/P * log_j(2) + 3e6 * (5 + ln P)^3 / sqrt(P).

    Vacuous (above 1) until P is astronomically large; reported regardless so
    measured values can be set against it."""
    if j < 2:
        raise ValueError("the explicit bound is stated for integer bases >= 2")
    if P < 1:
        raise ValueError("P must be positive")
    t1 = 2.0 ** (2 * j + 1) / P * (math.log(2) / math.log(j))
    t2 = 3e6 * (5.0 + math.log(P)) ** 3 / math.sqrt(P)
    return t1 + t2


@dataclass(frozen=True)
class ReportRow:
    base: int
    P: int
    d_measured: float
    d_measured_exact: Fraction
    d_bound: float
    ratio: float
    d_baseline: Optional[float] = None


@dataclass(frozen=True)
class DiscrepancyReport:
    alpha_label: str
    rows: tuple[ReportRow, ...]
    baseline_included: bool

    def csv_text(self) -> str:
        header = "base,P,D_measured,D_corollary_bound,ratio"
        if self.baseline_included:
            header += ",D_champernowne"
        lines = [header]
        for row in self.rows:
            line = (
                f"{row.base},{row.P},{row.d_measured!r},{row.d_bound!r},{row.ratio!r}"
            )
            if self.baseline_included:
                line += f",{row.d_baseline!r}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def json_doc(self) -> dict:
        rows = []
        for row in self.rows:
            doc = {
                "base": row.base,
                "P": row.P,
                "D_measured": row.d_measured,
                "D_measured_exact": str(row.d_measured_exact),
                "D_corollary_bound": row.d_bound,
                "ratio": row.ratio,
            }
            if self.baseline_included:
                doc["D_champernowne"] = row.d_baseline
            rows.append(doc)
        return {"alpha": self.alpha_label, "rows": rows}


def required_r_for(schedule: Schedule, needed_bits: int, r_hint: int = 1) -> int:
    """Smallest r with n_r >= needed_bits (for insufficient-precision advice)."""
    r = max(1, r_hint)
    while schedule.n(r) < needed_bits:
        r += 1
    return r


_RADIUS_GUARD_BITS = 32


def report(
    state: ConstructionState,
    bases: Sequence[int],
    P_ladder: Sequence[int],
    include_baseline: bool = False,
    alpha_label: str = "constructed",
) -> DiscrepancyReport:
    """Measured star discrepancy of {alpha lambda^x} against the explicit bound
    over a ladder of P, per integer base; optionally with the Champernowne
    baseline measured on the same grid."""
    sched = state.schedule
    tail = tail_bound(state.r, sched).to_fraction()
    rows = []
    guard = Fraction(1, 1 << _RADIUS_GUARD_BITS)
    for base in bases:
        if base < 2:
            raise ValueError("report bases must be integers >= 2")
        spec = BaseSpec.from_int(base)
        for P in P_ladder:
            max_radius = tail * Fraction(base) ** (P - 1)
            if max_radius > guard:
                needed = P * math.log2(base) + _RADIUS_GUARD_BITS + 1
                r_req = required_r_for(sched, math.ceil(needed), state.r)
                raise InsufficientPrecision(
                    f"alpha tail 2^{1 - sched.n(state.r)} too wide for base {base}, "
                    f"P {P}; run to r_max >= {r_req}",
                    required_r_max=r_req,
                )
            pts = orbit_points(
                state.alpha, spec, 0, P, value_tail=tail, label=alpha_label
            )
            exact = star_discrepancy_exact(pts)
            bound = corollary_bound(P, base)
            baseline = None
            if include_baseline:
                ndig = P + math.ceil(70 / math.log2(base))
                cval = champernowne_fraction(base, ndig)
                cpts = orbit_mod1(cval, spec, 0, P)
                baseline = star_discrepancy(cpts)
            rows.append(
                ReportRow(
                    base,
                    P,
                    float(exact),
                    exact,
                    bound,
                    float(exact) / bound,
                    baseline,
                )
            )
    return DiscrepancyReport(alpha_label, tuple(rows), include_baseline)
