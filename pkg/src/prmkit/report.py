"""Comparison reports across saved evaluation runs.

Consumes the JSON documents written by the eval subcommands and renders a
side-by-side table (CSV and aligned text) plus an optional score-vs-data-size
chart when the runs carry data-size annotations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .errors import ValidationError

PRIMARY_METRIC = {"first_error": "f1", "step_judgment": "prmscore"}


@dataclass(frozen=True)
class RunSummary:
    label: str
    benchmark: str
    metrics: dict[str, float]
    data_size: int | None
    path: Path


def load_run(path: str | Path) -> RunSummary:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read run report {p}: {exc}") from exc
    if not isinstance(doc, dict) or "benchmark" not in doc or "metrics" not in doc:
        raise ValidationError(f"run report {p} lacks benchmark/metrics fields")
    run = doc.get("run") or {}
    label = str(run.get("label") or p.stem)
    raw_size = run.get("data_size")
    data_size: int | None
    if raw_size is None:
        data_size = None
    else:
        try:
            data_size = int(raw_size)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"run report {p} has non-integer data_size") from exc
    metrics = {
        k: float(v) for k, v in doc["metrics"].items() if isinstance(v, (int, float))
    }
    benchmark = str(doc["benchmark"])
    if benchmark not in PRIMARY_METRIC:
        raise ValidationError(
            f"run report {p} has unknown benchmark {benchmark!r}; "
            f"expected one of {sorted(PRIMARY_METRIC)}"
        )
    return RunSummary(label=label, benchmark=benchmark, metrics=metrics, data_size=data_size, path=p)


def _ordered(runs: Sequence[RunSummary]) -> list[RunSummary]:
    return sorted(runs, key=lambda r: (r.benchmark, r.label, str(r.path)))


def comparison_rows(runs: Sequence[RunSummary]) -> tuple[list[str], list[list[str]]]:
    """Header plus one row per run; metric columns are the sorted union."""
    if not runs:
        raise ValidationError("no runs to compare")
    metric_names = sorted({name for run in runs for name in run.metrics})
    header = ["label", "benchmark", "data_size", *metric_names]
    rows = []
    for run in _ordered(runs):
        row = [run.label, run.benchmark, "" if run.data_size is None else str(run.data_size)]
        for name in metric_names:
            value = run.metrics.get(name)
            row.append("" if value is None else f"{value:.6f}")
        rows.append(row)
    return header, rows


def write_comparison_csv(runs: Sequence[RunSummary], path: str | Path) -> Path:
    header, rows = comparison_rows(runs)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return p


def render_comparison_text(runs: Sequence[RunSummary]) -> str:
    header, rows = comparison_rows(runs)
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(row: Sequence[str]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_comparison_text(runs: Sequence[RunSummary], path: str | Path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(render_comparison_text(runs), encoding="utf-8")
    return p


def write_scaling_chart(runs: Sequence[RunSummary], path: str | Path) -> Path | None:
    """Primary metric against data size, one series per benchmark.

    Skipped (returns None) unless at least two runs carry a data size. The
    PNG is written with pinned metadata so repeated runs are byte-identical.
    """
    sized = [r for r in runs if r.data_size is not None]
    if len(sized) < 2:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    for benchmark in sorted({r.benchmark for r in sized}):
        metric = PRIMARY_METRIC[benchmark]
        points = sorted(
            (r.data_size, r.metrics[metric])
            for r in sized
            if r.benchmark == benchmark and metric in r.metrics
        )
        if not points:
            continue
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", label=f"{benchmark} ({metric})")
    ax.set_xlabel("training examples")
    ax.set_ylabel("score")
    ax.set_title("Score against data size")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(p, format="png", metadata={"Software": "prmkit"})
    plt.close(fig)
    return p


def build_report(
    run_paths: Sequence[str | Path],
    out_dir: str | Path,
    *,
    chart: bool = True,
) -> dict[str, Any]:
    """Load runs, write table artifacts, return a manifest of what was written."""
    runs = [load_run(p) for p in run_paths]
    out = Path(out_dir)
    written = {
        "csv": str(write_comparison_csv(runs, out / "comparison.csv")),
        "txt": str(write_comparison_text(runs, out / "comparison.txt")),
    }
    if chart:
        chart_path = write_scaling_chart(runs, out / "scaling.png")
        if chart_path is not None:
            written["chart"] = str(chart_path)
    return {"runs": len(runs), "written": written}
