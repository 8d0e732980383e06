"""The construction loop: find the least qualifying digit block a_r, accumulate
alpha exactly, certify output digits, and keep a replayable audit trail.

Each step r searches c = 0, 1, 2, ... for the least candidate whose weighted
exponential-sum aggregate D(c) stays below the existence bound for every
active base j <= omega(r), then advances

    alpha_{r+1} = alpha_r + a_r / (2^n_r q_r)

in exact dyadic arithmetic.  The limit alpha satisfies
|alpha - alpha_r| < 2 * 2^-n_r, which is what certified digit extraction and
every downstream analyzer rely on.

Search determinism: candidates are scanned in fixed-size chunks in ascending
order; a chunk stops at its first qualifying candidate, and the reducer takes
the first chunk (by index) that reports a hit.  The thread count only sets how
many chunks run concurrently, never which candidates are examined, so results
and operation counts are identical across thread counts.  Counters follow the
idealized unit-cost accounting (one S value = one unit); speculative chunks
beyond the winning one are discarded, not counted.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .dyadic import Dyadic
from .errors import CapExhausted, CheckpointError, CheckpointVersionMismatch
from .expsums import PhaseContext, bounds_for, disc_sum_D_detail, strict_box_bound
from .schedule import Schedule

CHECKPOINT_FORMAT_VERSION = 1

_DIGIT_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SearchPolicy:
    """How the candidate search runs.  bound_mode "lemma2" uses the proven
    existence threshold (with the omega(r) factor); "strict-box" drops the
    factor and may legitimately exhaust the cap."""

    mode: str = "sequential-least"  # | "chunked-parallel-least"
    candidate_cap: int = 1 << 20
    bound_mode: str = "lemma2"  # | "strict-box"
    early_abort: bool = True
    chunk_size: int = 16
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("sequential-least", "chunked-parallel-least"):
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.bound_mode not in ("lemma2", "strict-box"):
            raise ValueError(f"unknown bound mode {self.bound_mode!r}")
        if self.candidate_cap < 1 or self.chunk_size < 1 or self.threads < 1:
            raise ValueError("cap, chunk_size and threads must be positive")


@dataclass
class StepRecord:
    """Audit of one accepted step; D_values[j-1] is the accepted candidate's
    aggregate for base j, strictly below its bound."""

    r: int
    a_r: int
    D_values: list[float]
    candidates_tried: int
    s_eval_count: int
    d_evals_by_j: list[int]
    wall_time: float = 0.0  # seconds; never serialized


@dataclass
class OpCounters:
    s_evals: int = 0
    d_evals: int = 0
    candidates: int = 0

    def add(self, s_evals: int, d_evals: int, candidates: int) -> None:
        self.s_evals += s_evals
        self.d_evals += d_evals
        self.candidates += candidates


@dataclass
class ConstructionState:
    """Exact running state: alpha equals start + sum of recorded increments,
    reconstructible bit for bit from the history."""

    schedule: Schedule
    r: int
    alpha: Dyadic
    history: list[StepRecord] = field(default_factory=list)
    op_counters: OpCounters = field(default_factory=OpCounters)

    @classmethod
    def initial(cls, schedule: Schedule) -> "ConstructionState":
        return cls(schedule, schedule.ell(1), schedule.start)


def _search_bounds(schedule: Schedule, r: int, policy: SearchPolicy) -> list[float]:
    w = schedule.omega(r)
    if policy.bound_mode == "lemma2":
        return [bounds_for(r, j, schedule).lemma2_bound for j in range(1, w + 1)]
    return [strict_box_bound(r, j, schedule) for j in range(1, w + 1)]


@dataclass
class _CandidateResult:
    qualifies: bool
    D_values: list[float]
    s_evals: int
    d_evals_by_j: list[int]


def _evaluate_candidate(
    schedule: Schedule,
    alpha_r: Dyadic,
    r: int,
    c: int,
    bounds: list[float],
    early_abort: bool,
) -> _CandidateResult:
    # Bases are tried in ascending j; the candidate is abandoned on the first
    # failing base (cheapest rejection first).
    d_values: list[float] = []
    d_by_j = [0] * len(bounds)
    s_total = 0
    for j0, bound in enumerate(bounds):
        ctx = PhaseContext(schedule, alpha_r, r, j0 + 1, c)
        if ctx.tau == 0:
            d_values.append(0.0)
            continue
        detail = disc_sum_D_detail(ctx, abort_above=bound if early_abort else None)
        s_total += detail.s_values
        d_by_j[j0] += 1
        if not detail.value < bound:
            return _CandidateResult(False, d_values, s_total, d_by_j)
        d_values.append(detail.value)
    return _CandidateResult(True, d_values, s_total, d_by_j)


@dataclass
class _ChunkResult:
    hit_c: Optional[int]
    hit: Optional[_CandidateResult]
    examined: int
    s_evals: int
    d_evals_by_j: list[int]


def _scan_range(
    schedule, alpha_r, r, lo, hi, bounds, early_abort
) -> _ChunkResult:
    s_total = 0
    d_by_j = [0] * len(bounds)
    for c in range(lo, hi):
        res = _evaluate_candidate(schedule, alpha_r, r, c, bounds, early_abort)
        s_total += res.s_evals
        for i, d in enumerate(res.d_evals_by_j):
            d_by_j[i] += d
        if res.qualifies:
            return _ChunkResult(c, res, c - lo + 1, s_total, d_by_j)
    return _ChunkResult(None, None, hi - lo, s_total, d_by_j)


def _candidate_limit(schedule: Schedule, r: int, cap: int) -> int:
    L = schedule.log2_q(r)
    if L >= cap.bit_length():
        return cap
    return min(cap, 1 << L)


def search_a_r(
    state: ConstructionState, policy: SearchPolicy
) -> tuple[int, StepRecord]:
    """Least c in [0, min(q_r, cap)) with D(c) below every active bound.

    The chunked-parallel mode returns the same candidate and the same counters
    as a single-threaded chunked scan; see the module docstring.
    """
    schedule, r, alpha_r = state.schedule, state.r, state.alpha
    if r < schedule.ell(1):
        raise ValueError(f"step index {r} below the loop start ell_1 = {schedule.ell(1)}")
    bounds = _search_bounds(schedule, r, policy)
    limit = _candidate_limit(schedule, r, policy.candidate_cap)

    chunks: list[tuple[int, int]]
    if policy.mode == "sequential-least":
        chunks = [(0, limit)]
    else:
        B = policy.chunk_size
        chunks = [(lo, min(lo + B, limit)) for lo in range(0, limit, B)]

    examined = 0
    s_total = 0
    d_by_j = [0] * len(bounds)
    winner: Optional[_ChunkResult] = None

    def absorb(res: _ChunkResult) -> None:
        nonlocal examined, s_total
        examined += res.examined
        s_total += res.s_evals
        for i, d in enumerate(res.d_evals_by_j):
            d_by_j[i] += d

    if policy.mode == "sequential-least" or policy.threads == 1:
        for lo, hi in chunks:
            res = _scan_range(schedule, alpha_r, r, lo, hi, bounds, policy.early_abort)
            absorb(res)
            if res.hit_c is not None:
                winner = res
                break
    else:
        with ThreadPoolExecutor(max_workers=policy.threads) as pool:
            idx = 0
            while idx < len(chunks) and winner is None:
                wave = chunks[idx : idx + policy.threads]
                futures = [
                    pool.submit(
                        _scan_range,
                        schedule,
                        alpha_r,
                        r,
                        lo,
                        hi,
                        bounds,
                        policy.early_abort,
                    )
                    for lo, hi in wave
                ]
                # Reduce in chunk order; chunks past the first hit are
                # speculative and contribute nothing to the counters.
                for fut in futures:
                    res = fut.result()
                    if winner is None:
                        absorb(res)
                        if res.hit_c is not None:
                            winner = res
                idx += len(wave)

    if winner is None:
        raise CapExhausted(
            f"no candidate below {limit} qualifies at step {r} "
            f"(bound mode {policy.bound_mode})"
        )
    record = StepRecord(
        r=r,
        a_r=winner.hit_c,
        D_values=winner.hit.D_values,
        candidates_tried=examined,
        s_eval_count=s_total,
        d_evals_by_j=d_by_j,
    )
    return winner.hit_c, record


def step(state: ConstructionState, policy: SearchPolicy) -> ConstructionState:
    """Run one search and advance alpha exactly."""
    t0 = time.perf_counter()
    a_r, record = search_a_r(state, policy)
    r = state.r
    state.alpha = state.alpha + Dyadic(
        a_r, state.schedule.n(r) + state.schedule.log2_q(r)
    )
    record.wall_time = time.perf_counter() - t0
    state.history.append(record)
    state.op_counters.add(record.s_eval_count, sum(record.d_evals_by_j), record.candidates_tried)
    state.r = r + 1
    return state


def run(schedule: Schedule, policy: SearchPolicy, r_max: int) -> ConstructionState:
    """Steps ell_1 .. r_max inclusive."""
    if r_max < schedule.ell(1):
        raise ValueError(f"r_max {r_max} is below the loop start ell_1 = {schedule.ell(1)}")
    return resume(ConstructionState.initial(schedule), policy, r_max)


def resume(state: ConstructionState, policy: SearchPolicy, r_max: int) -> ConstructionState:
    """Continue a (possibly checkpoint-loaded) state through step r_max; the
    result is bit-identical to an uninterrupted run."""
    while state.r <= r_max:
        step(state, policy)
    return state


def tail_bound(r: int, schedule: Schedule) -> Dyadic:
    """Certified gap to the limit: |alpha - alpha_r| < 2 * 2^-n_r."""
    return Dyadic(2, schedule.n(r))


@dataclass(frozen=True)
class CertifiedDigits:
    """Fractional-digit prefix shared by every real in [alpha_r, alpha_r + tail]."""

    base: int
    digits: str
    length: int
    tail_exponent: int  # tail bound is 2^tail_exponent


def certified_digits(state: ConstructionState, out_base: int) -> CertifiedDigits:
    """Longest digit prefix of the fractional part that is identical across the
    whole uncertainty interval; a run of (base-1) digits at the cut is handled
    by the interval itself (the prefix simply stops before the carry risk)."""
    if not (2 <= out_base <= len(_DIGIT_ALPHABET)):
        raise ValueError(f"out_base must be in 2..{len(_DIGIT_ALPHABET)}")
    tail = tail_bound(state.r, state.schedule)
    lo = state.alpha
    hi = lo + tail
    if lo.floor() != hi.floor():
        return CertifiedDigits(out_base, "", 0, 1 - state.schedule.n(state.r))
    a = lo.frac().to_fraction()
    b = (hi - hi.floor()).to_fraction()
    digits = []
    while True:
        a *= out_base
        b *= out_base
        da = a.numerator // a.denominator
        db = b.numerator // b.denominator
        if da != db:
            break
        digits.append(_DIGIT_ALPHABET[da])
        a -= da
        b -= da
    return CertifiedDigits(
        out_base, "".join(digits), len(digits), 1 - state.schedule.n(state.r)
    )


def reconstruct_alpha(schedule: Schedule, history: list[StepRecord]) -> Dyadic:
    """alpha from scratch: start + sum of a_m / (2^n_m q_m)."""
    alpha = schedule.start
    for rec in history:
        alpha = alpha + Dyadic(rec.a_r, schedule.n(rec.r) + schedule.log2_q(rec.r))
    return alpha


# -- checkpointing ---------------------------------------------------------------


def _state_to_doc(state: ConstructionState) -> dict:
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "schedule": state.schedule.to_json(),
        "next_r": state.r,
        "op_counters": {
            "s_evals": state.op_counters.s_evals,
            "d_evals": state.op_counters.d_evals,
            "candidates": state.op_counters.candidates,
        },
        "history": [
            {
                "r": rec.r,
                "a_r": str(rec.a_r),
                "D_values": rec.D_values,
                "candidates_tried": rec.candidates_tried,
                "s_eval_count": rec.s_eval_count,
                "d_evals_by_j": rec.d_evals_by_j,
            }
            for rec in state.history
        ],
    }


def checkpoint_save(state: ConstructionState, path) -> None:
    """Canonical serialization: identical states produce identical bytes."""
    doc = _state_to_doc(state)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def checkpoint_load(path, precision_budget: Optional[int] = None) -> ConstructionState:
    """Load and re-validate: contiguous steps from ell_1, a_r in [0, q_r), and
    every recorded D value strictly below its bound."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable or truncated checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CheckpointError("checkpoint lacks a format_version")
    if doc["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionMismatch(
            f"format_version {doc['format_version']} unsupported"
        )
    try:
        kwargs = {}
        if precision_budget is not None:
            kwargs["precision_budget"] = precision_budget
        schedule = Schedule.from_json(doc["schedule"], **kwargs)
        history = []
        for entry in doc["history"]:
            history.append(
                StepRecord(
                    r=int(entry["r"]),
                    a_r=int(entry["a_r"]),
                    D_values=[float(v) for v in entry["D_values"]],
                    candidates_tried=int(entry["candidates_tried"]),
                    s_eval_count=int(entry["s_eval_count"]),
                    d_evals_by_j=[int(v) for v in entry["d_evals_by_j"]],
                )
            )
        next_r = int(doc["next_r"])
        counters = OpCounters(
            s_evals=int(doc["op_counters"]["s_evals"]),
            d_evals=int(doc["op_counters"]["d_evals"]),
            candidates=int(doc["op_counters"]["candidates"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint field: {exc}") from exc

    expect_r = schedule.ell(1)
    for rec in history:
        if rec.r != expect_r:
            raise CheckpointError(f"history not contiguous at step {rec.r}")
        if rec.a_r < 0 or rec.a_r.bit_length() > schedule.log2_q(rec.r):
            raise CheckpointError(f"a_r out of [0, q_r) at step {rec.r}")
        w = schedule.omega(rec.r)
        if len(rec.D_values) != w:
            raise CheckpointError(f"D_values arity mismatch at step {rec.r}")
        for j0, value in enumerate(rec.D_values):
            bound = bounds_for(rec.r, j0 + 1, schedule).lemma2_bound
            if schedule.tau(rec.r, j0 + 1) and not value < bound:
                raise CheckpointError(
                    f"recorded D {value} not below bound {bound} at step {rec.r}, j {j0 + 1}"
                )
        expect_r += 1
    if history and next_r != history[-1].r + 1:
        raise CheckpointError("next_r does not follow the last recorded step")

    state = ConstructionState(
        schedule, next_r, reconstruct_alpha(schedule, history), history, counters
    )
    return state


def write_step_csv(state: ConstructionState, path, timing: bool = False) -> None:
    """Per-step audit CSV.  wall_ms is 0 unless timing is requested, so default
    outputs are byte-identical across runs and thread counts."""
    lines = ["r,a_r,n_r,log2_q_r,candidates_tried,s_eval_count,max_j,wall_ms"]
    for rec in state.history:
        wall_ms = int(round(rec.wall_time * 1000)) if timing else 0
        lines.append(
            f"{rec.r},{rec.a_r},{state.schedule.n(rec.r)},{state.schedule.log2_q(rec.r)},"
            f"{rec.candidates_tried},{rec.s_eval_count},{len(rec.D_values)},{wall_ms}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
