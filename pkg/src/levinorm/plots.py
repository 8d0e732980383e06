"""Figure rendering for the analyze report: measured star discrepancy against
the explicit bound over the P ladder, one curve per base, written next to the
delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .discrepancy import DiscrepancyReport


def render_discrepancy_figure(report: DiscrepancyReport, out_path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    bases = sorted({row.base for row in report.rows})
    for base in bases:
        rows = [r for r in report.rows if r.base == base]
        rows.sort(key=lambda r: r.P)
        ps = [r.P for r in rows]
        ax.plot(ps, [r.d_measured for r in rows], "o-", label=f"base {base}")
        if report.baseline_included and rows[0].d_baseline is not None:
            ax.plot(
                ps,
                [r.d_baseline for r in rows],
                "s--",
                alpha=0.6,
                label=f"Champernowne base {base}",
            )
    # The explicit bound is many orders of magnitude above the measurements at
    # these P; draw it only if it would stay on a readable axis.
    max_bound = max(r.d_bound for r in report.rows)
    if max_bound < 10.0:
        for base in bases:
            rows = sorted(
                (r for r in report.rows if r.base == base), key=lambda r: r.P
            )
            ax.plot(
                [r.P for r in rows],
                [r.d_bound for r in rows],
                ":",
                alpha=0.5,
                label=f"bound base {base}",
            )
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("P")
    ax.set_ylabel("star discrepancy")
    ax.set_title(f"discrepancy of the {report.alpha_label} orbit")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    # Date-free metadata keeps repeated renders byte-identical.
    fig.savefig(out_path, dpi=120, metadata={"Date": None})
    plt.close(fig)
