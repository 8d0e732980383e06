"""Batch front end: construct, digits, analyze, validate, verify.

Exit codes are a stable contract: 0 success, 1 runtime failure (including
failed audits and refused schedules), 2 usage, 3 candidate cap exhausted,
4 precision exhausted / insufficient.  The LEVIN_PRECISION_BITS environment
variable overrides the certified-arithmetic precision budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .champernowne import champernowne_digits
from .construction import (
    ConstructionState,
    SearchPolicy,
    certified_digits,
    checkpoint_load,
    checkpoint_save,
    run,
    write_step_csv,
)
from .dyadic import Dyadic
from .discrepancy import proof_chain_check, report
from .errors import (
    BudgetExceeded,
    CapExhausted,
    CheckpointError,
    InsufficientPrecision,
    LevinormError,
    PrecisionExhausted,
    ScheduleError,
    UnrecognizedRule,
)
from .expsums import PhaseContext, bounds_for, disc_sum_D_detail, mean_square_all_pairs
from .schedule import (
    DEFAULT_PRECISION_BUDGET,
    Schedule,
    check_q_necessary,
    check_q_sufficient,
    classify_growth,
    concatenation_feasible,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CAP = 3
EXIT_PRECISION = 4

FORCED_STAMP = (
    "construction valid but normality not guaranteed by Levin's proof "
    "(validity checks overridden with --force)"
)


def _precision_budget() -> int:
    raw = os.environ.get("LEVIN_PRECISION_BITS")
    if raw:
        try:
            return max(64, int(raw))
        except ValueError:
            raise ScheduleError(f"LEVIN_PRECISION_BITS={raw!r} is not an integer")
    return DEFAULT_PRECISION_BUDGET


def _load_schedule(path: str) -> Schedule:
    return Schedule.load(path, precision_budget=_precision_budget())


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _validity_lines(schedule: Schedule, r_max: int) -> tuple[list[str], bool]:
    """Verdict lines for the schedule checks, naming the result each check
    feeds; returns (lines, construction_allowed)."""
    lines = []
    ok = True
    suff = check_q_sufficient(schedule, r_max)
    lines.append(
        f"sufficient-q (guarantees the mean-square bound, Levin Lemma 1): "
        f"{'pass' if suff.ok else 'FAIL'} for r <= {r_max}"
    )
    nec = check_q_necessary(schedule, r_max)
    reason = f" ({nec.reason})" if nec.reason else ""
    lines.append(
        f"necessary-q (q_r > 2^(n_(r+1)-n_r), required for Levin's proof): "
        f"{'pass' if nec.ok else 'FAIL'}{reason}"
    )
    ok = ok and suff.ok and nec.ok
    try:
        growth = classify_growth(schedule)
        lines.append(
            f"growth: {growth.kind}; proof bound {growth.bound_template}"
        )
        ok = ok and growth.normal
    except UnrecognizedRule:
        lines.append("growth: unrecognized rule (no classification claimed)")
    concat = concatenation_feasible(schedule, r_max)
    lines.append(
        "concatenation (sum log2 q_m <= n_r): "
        + ("feasible" if concat.ok else f"infeasible for all r <= {r_max} (blocks overlap)"
           if all(not i.ok for i in concat.items) else "infeasible for some r")
    )
    return lines, ok


def cmd_construct(args) -> int:
    schedule = _load_schedule(args.schedule)
    if args.rmax < schedule.ell(1):
        print(
            f"error: --rmax {args.rmax} is below the loop start ell_1 = {schedule.ell(1)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    lines, allowed = _validity_lines(schedule, max(args.rmax, 8))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not allowed and not args.force:
        for line in lines:
            print(line, file=sys.stderr)
        print(
            "error: schedule fails validity checks; re-run with --force to override",
            file=sys.stderr,
        )
        return EXIT_RUNTIME
    policy = SearchPolicy(
        mode="chunked-parallel-least",
        candidate_cap=args.cap,
        bound_mode="lemma2" if args.bound_mode == "lemma2" else "strict-box",
        threads=args.threads,
    )
    state = run(schedule, policy, args.rmax)
    checkpoint_save(state, out / "checkpoint.json")
    write_step_csv(state, out / "steps.csv", timing=args.timing)
    with open(out / "validity.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        if not allowed:
            fh.write(FORCED_STAMP + "\n")
    print(
        f"constructed steps {schedule.ell(1)}..{args.rmax}; "
        f"alpha scale {state.alpha.scale} bits; wrote {out / 'checkpoint.json'}"
    )
    if not allowed:
        print(FORCED_STAMP, file=sys.stderr)
    return EXIT_OK


def cmd_digits(args) -> int:
    out = Path(args.out) if args.out else None
    if args.champernowne:
        digits = champernowne_digits(args.base, args.count)
        header = f"# source=champernowne base={args.base} count={args.count}"
    else:
        if not args.checkpoint:
            print("error: need --checkpoint or --champernowne", file=sys.stderr)
            return EXIT_USAGE
        state = checkpoint_load(args.checkpoint, precision_budget=_precision_budget())
        cd = certified_digits(state, args.base)
        digits = cd.digits
        header = (
            f"# source=construction base={cd.base} certified_length={cd.length} "
            f"tail_exponent={cd.tail_exponent}"
        )
    body = "\n".join(digits[i : i + 64] for i in range(0, len(digits), 64))
    text = header + "\n" + body + "\n"
    if out:
        out.write_text(text, encoding="utf-8")
        print(f"wrote {out} ({len(digits)} digits)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    state = checkpoint_load(args.checkpoint, precision_budget=_precision_budget())
    rep = report(
        state,
        _int_list(args.bases),
        _int_list(args.ladder),
        include_baseline=args.baseline,
        alpha_label=args.label,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(rep.csv_text(), encoding="utf-8")
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(rep.json_doc(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    if not args.no_figure:
        from .plots import render_discrepancy_figure

        render_discrepancy_figure(rep, out / "report.png")
    print(f"wrote {len(rep.rows)} report rows to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    schedule = _load_schedule(args.schedule)
    lines, ok = _validity_lines(schedule, args.rmax)
    verdict = "valid" if ok else "not covered by the construction's proof"
    lines.append(f"verdict: {verdict}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _verify_state(state: ConstructionState, budget: int, least_cap: int) -> tuple[list[str], bool]:
    schedule = state.schedule
    lines = []
    ok = True
    alpha_r = schedule.start
    for rec in state.history:
        r = rec.r
        w = schedule.omega(r)
        worst_rel = 0.0
        step_ok = True
        for j in range(1, w + 1):
            if schedule.tau(r, j) == 0:
                continue
            ctx = PhaseContext(schedule, alpha_r, r, j, rec.a_r)
            d = disc_sum_D_detail(ctx).value
            bound = bounds_for(r, j, schedule).lemma2_bound
            recorded = rec.D_values[j - 1]
            drift = abs(d - recorded) / max(1.0, abs(recorded))
            worst_rel = max(worst_rel, drift)
            if drift > 1e-9 or not d < bound:
                step_ok = False
        status = "PASS" if step_ok else "FAIL"
        lines.append(
            f"lemma2-audit r={r}: {status} "
            f"(recorded-vs-recomputed drift {worst_rel:.2e})"
        )
        ok = ok and step_ok

        if rec.a_r <= least_cap:
            least_ok = True
            bounds = [bounds_for(r, j, schedule).lemma2_bound for j in range(1, w + 1)]
            for c in range(rec.a_r):
                qualifies = True
                for j in range(1, w + 1):
                    if schedule.tau(r, j) == 0:
                        continue
                    ctx = PhaseContext(schedule, alpha_r, r, j, c)
                    detail = disc_sum_D_detail(ctx, abort_above=bounds[j - 1])
                    if not detail.value < bounds[j - 1]:
                        qualifies = False
                        break
                if qualifies:
                    least_ok = False
                    break
            lines.append(f"least-candidate r={r}: {'PASS' if least_ok else 'FAIL'}")
            ok = ok and least_ok
        else:
            lines.append(f"least-candidate r={r}: SKIP (a_r above audit cap)")

        try:
            q = schedule.q(r)
        except ScheduleError:
            q = None
        if q is not None and q <= budget:
            l1_ok = True
            for j in range(1, w + 1):
                if schedule.tau(r, j) == 0:
                    continue
                table = mean_square_all_pairs(r, j, schedule, alpha_r, budget=budget)
                b1 = bounds_for(r, j, schedule).lemma1_bound
                if not all(t < b1 for t in table.values()):
                    l1_ok = False
            lines.append(f"lemma1-brute-force r={r}: {'PASS' if l1_ok else 'FAIL'}")
            ok = ok and l1_ok
        else:
            lines.append(f"lemma1-brute-force r={r}: SKIP (q_r above budget)")

        alpha_r = alpha_r + Dyadic(rec.a_r, schedule.n(r) + schedule.log2_q(r))

    if state.alpha != alpha_r:
        lines.append("alpha-reconstruction: FAIL")
        ok = False
    else:
        lines.append("alpha-reconstruction: PASS (bit-identical)")

    gammas = [Fraction(k, 10) for k in range(1, 10)]
    for rec in state.history:
        r = rec.r
        for j in range(1, schedule.omega(r) + 1):
            if r < schedule.ell(j) or schedule.tau(r, j) == 0:
                continue
            try:
                res = proof_chain_check(state, r, j, gammas)
            except (InsufficientPrecision, PrecisionExhausted):
                lines.append(f"proof-chain r={r} j={j}: SKIP (tail too wide)")
                continue
            lines.append(f"proof-chain r={r} j={j}: {'PASS' if res.ok else 'FAIL'}")
            ok = ok and res.ok
    return lines, ok


def cmd_verify(args) -> int:
    state = checkpoint_load(args.checkpoint, precision_budget=_precision_budget())
    lines, ok = _verify_state(state, args.budget, args.least_cap)
    text = "\n".join(lines) + f"\nverdict: {'PASS' if ok else 'FAIL'}\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levinorm",
        description="Construction and analysis of absolutely normal numbers "
        "with controlled discrepancy (after M. Levin, 1979).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="run the construction and checkpoint it")
    p.add_argument("--schedule", required=True, help="schedule JSON document")
    p.add_argument("--rmax", type=int, required=True, help="last step to run")
    p.add_argument("--cap", type=int, default=1 << 20, help="candidate search cap")
    p.add_argument("--bound-mode", choices=["lemma2", "strict"], default="lemma2")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--force", action="store_true", help="override failed validity checks")
    p.add_argument("--timing", action="store_true", help="record real wall_ms in the CSV")
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("digits", help="emit certified digits (or the baseline)")
    p.add_argument("--checkpoint", help="checkpoint JSON from construct")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--champernowne", action="store_true", help="emit the baseline instead")
    p.add_argument("--count", type=int, default=64, help="digit count for --champernowne")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(fn=cmd_digits)

    p = sub.add_parser("analyze", help="measure orbit discrepancy over a P ladder")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bases", default="2", help="comma-separated integer bases")
    p.add_argument("--ladder", default="64,256,1024", help="comma-separated P values")
    p.add_argument("--baseline", action="store_true", help="add Champernowne columns")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("--label", default="constructed", help="name for the alpha under test")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("validate", help="schedule validity verdicts")
    p.add_argument("--schedule", required=True)
    p.add_argument("--rmax", type=int, default=40)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("verify", help="re-audit a checkpoint's recorded inequalities")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--budget", type=int, default=4096, help="mean-square enumeration cap")
    p.add_argument("--least-cap", type=int, default=1024, dest="least_cap",
                   help="max a_r for the least-candidate re-scan")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CapExhausted as exc:
        print(f"cap-exhausted: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (PrecisionExhausted, InsufficientPrecision) as exc:
        print(f"precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ScheduleError, CheckpointError, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
