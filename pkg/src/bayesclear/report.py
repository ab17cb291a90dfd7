"""Report emission: delimited output plus rendered figures.

CSV files are byte-stable given identical inputs: rows are sorted
canonically, floats are written with ``repr``, and booleans as
``true``/``false``. Figures (PNG) are rendered to the same directory from
the same data; only the CSVs carry the byte-stability contract.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .benchmark import (
    BASELINE_KINDS,
    BenchmarkReport,
    RunRecord,
    SweepRow,
    aggregate_rows,
    common_cleared_ids,
)

RUNS_HEADER = "instance_id,auction,tau,cleared,rounds,objective_gap,seed"
AGGREGATE_HEADER = (
    "domain,auction,instances,cleared,common_cleared,"
    "rounds_mean,rounds_q1,rounds_median,rounds_q3"
)
LONG_HEADER = "figure,domain,series,x,y"
SWEEP_HEADER = "bias_mode,variance,rounds"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_lines(path: Path, lines: Sequence[str]) -> None:
    path.write_text("\n".join(lines) + "\n")


def _run_row(run: RunRecord) -> str:
    return ",".join(
        _fmt(v)
        for v in (
            run.instance_id,
            run.auction,
            run.tau,
            run.cleared,
            run.rounds,
            run.objective_gap,
            run.seed,
        )
    )


def emit_report(
    reports: Union[BenchmarkReport, Sequence[BenchmarkReport]],
    destination: Union[str, Path],
    figures: bool = True,
) -> list[Path]:
    """Write runs.csv, aggregates.csv, and the plot-ready long.csv; when
    ``figures`` is set, also render the cleared-count and rounds figures."""
    if isinstance(reports, BenchmarkReport):
        reports = [reports]
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)
    written = []

    runs = [run for report in reports for run in report.runs]
    runs.sort(key=lambda r: (r.instance_id, r.auction, r.tau_index or 0))
    runs_path = destination / "runs.csv"
    _write_lines(runs_path, [RUNS_HEADER] + [_run_row(r) for r in runs])
    written.append(runs_path)

    agg_lines = [AGGREGATE_HEADER]
    for report in reports:
        for row in aggregate_rows(report):
            agg_lines.append(",".join(_fmt(row[k]) for k in AGGREGATE_HEADER.split(",")))
    agg_path = destination / "aggregates.csv"
    _write_lines(agg_path, agg_lines)
    written.append(agg_path)

    long_lines = [LONG_HEADER]
    for report in reports:
        for row in aggregate_rows(report):
            long_lines.append(
                ",".join(
                    (
                        "cleared_counts",
                        report.domain,
                        row["auction"],
                        "",
                        _fmt(row["cleared"]),
                    )
                )
            )
        for kind in ("bayesian",) + BASELINE_KINDS:
            for instance_id in common_cleared_ids(report):
                run = report.kind_run(instance_id, kind)
                long_lines.append(
                    ",".join(
                        ("rounds_dist", report.domain, kind, instance_id,
                         _fmt(run.rounds))
                    )
                )
    long_path = destination / "long.csv"
    _write_lines(long_path, long_lines)
    written.append(long_path)

    if figures:
        written.extend(render_benchmark_figures(reports, destination))
    return written


def emit_llg_sweep(
    rows: Sequence[SweepRow],
    destination: Union[str, Path],
    figures: bool = True,
) -> list[Path]:
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)
    lines = [SWEEP_HEADER] + [
        ",".join((row.bias_mode, _fmt(row.variance), _fmt(row.rounds)))
        for row in rows
    ]
    sweep_path = destination / "sweep.csv"
    _write_lines(sweep_path, lines)
    written = [sweep_path]
    if figures:
        written.append(render_sweep_figure(rows, destination))
    return written


def render_sweep_figure(
    rows: Sequence[SweepRow], destination: Union[str, Path]
) -> Path:
    destination = Path(destination)
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode in sorted({row.bias_mode for row in rows}):
        mode_rows = sorted(
            (r for r in rows if r.bias_mode == mode), key=lambda r: r.variance
        )
        ax.plot(
            [r.variance for r in mode_rows],
            [r.rounds for r in mode_rows],
            marker="o",
            label=mode,
        )
    ax.set_xlabel("prior variance of the global agent's value")
    ax.set_ylabel("rounds to clear")
    ax.legend()
    fig.tight_layout()
    path = destination / "llg_sweep.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_benchmark_figures(
    reports: Sequence[BenchmarkReport], destination: Union[str, Path]
) -> list[Path]:
    destination = Path(destination)
    kinds = ("bayesian",) + BASELINE_KINDS
    domains = [report.domain for report in reports]

    fig, ax = plt.subplots(figsize=(1.5 + 1.6 * len(domains), 4))
    width = 0.8 / len(kinds)
    for k_idx, kind in enumerate(kinds):
        counts = []
        for report in reports:
            counts.append(
                sum(report.kind_run(i, kind).cleared for i in report.instance_ids)
            )
        positions = [d + k_idx * width for d in range(len(domains))]
        ax.bar(positions, counts, width=width, label=kind)
    ax.set_xticks([d + 0.4 - width / 2 for d in range(len(domains))])
    ax.set_xticklabels(domains)
    ax.set_ylabel("instances cleared")
    ax.legend()
    fig.tight_layout()
    cleared_path = destination / "cleared_counts.png"
    fig.savefig(cleared_path, dpi=150)
    plt.close(fig)

    fig, axes = plt.subplots(
        1, len(reports), figsize=(1.5 + 2.4 * len(domains), 4), squeeze=False
    )
    for ax, report in zip(axes[0], reports):
        common = common_cleared_ids(report)
        data = [
            [report.kind_run(i, kind).rounds for i in common] or [0]
            for kind in kinds
        ]
        ax.boxplot(data, tick_labels=list(kinds))
        ax.set_title(report.domain)
        ax.set_ylabel("rounds to clear")
    fig.tight_layout()
    rounds_path = destination / "rounds_box.png"
    fig.savefig(rounds_path, dpi=150)
    plt.close(fig)

    return [cleared_path, rounds_path]
