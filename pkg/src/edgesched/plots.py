"""Figure rendering for comparison reports.

Charts are rendered with matplotlib straight to SVG. Output is
byte-deterministic: a fixed hash salt pins the generated element ids and
the date metadata is stripped, so identical inputs give identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ResultRow, summarize

PLOT_KINDS = ("time_vs_tasks", "util_vs_tasks", "migrations_vs_time")

_STYLE = {
    "dqn": {"color": "#1f77b4", "marker": "o"},
    "ps": {"color": "#d62728", "marker": "s"},
    "lbs": {"color": "#2ca02c", "marker": "^"},
    "greedy": {"color": "#9467bd", "marker": "D"},
    "random": {"color": "#7f7f7f", "marker": "x"},
    "oracle": {"color": "#ff7f0e", "marker": "*"},
}


def _algorithms(rows: list[ResultRow]) -> list[str]:
    seen: list[str] = []
    for r in rows:
        if r.algorithm not in seen:
            seen.append(r.algorithm)
    return seen


def _style(algo: str) -> dict:
    return _STYLE.get(algo, {"color": "#17becf", "marker": "v"})


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_plot(rows: list[ResultRow], kind: str, path: str | Path) -> None:
    """Render one chart kind from result rows to an SVG file."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    plt.rcParams["svg.hashsalt"] = "edgesched"
    fig, ax = plt.subplots(figsize=(7.0, 4.5))

    if kind == "migrations_vs_time":
        for algo in _algorithms(rows):
            cell = [r for r in rows if r.algorithm == algo]
            ax.scatter(
                [r.migration_count for r in cell],
                [r.t_total for r in cell],
                label=algo,
                **_style(algo),
            )
        ax.set_xlabel("task migrations (count)")
        ax.set_ylabel("total processing time (s)")
        ax.set_title("Task migration count vs. total processing time")
    else:
        metric = "t_total_mean" if kind == "time_vs_tasks" else "utilization_mean"
        summary = summarize(rows)
        for algo in _algorithms(rows):
            cell = [s for s in summary if s["algorithm"] == algo]
            cell.sort(key=lambda s: s["n_tasks"])
            ax.plot(
                [s["n_tasks"] for s in cell],
                [s[metric] for s in cell],
                label=algo,
                **_style(algo),
            )
        ax.set_xlabel("number of tasks")
        if kind == "time_vs_tasks":
            ax.set_ylabel("mean total processing time (s)")
            ax.set_title("Total processing time vs. task quantity")
        else:
            ax.set_ylabel("mean resource utilization (fraction)")
            ax.set_title("Resource utilization vs. task quantity")

    ax.grid(True, alpha=0.3)
    if rows:
        ax.legend()
    _save(fig, path)


def render_report_figures(rows: list[ResultRow], out_dir: str | Path, stem: str = "results") -> list[Path]:
    """Render the three standard figures next to a results CSV."""
    out_dir = Path(out_dir)
    paths = []
    for kind in PLOT_KINDS:
        path = out_dir / f"{stem}_{kind}.svg"
        render_plot(rows, kind, path)
        paths.append(path)
    return paths
