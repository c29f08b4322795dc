#!/usr/bin/env python3
"""Render publication-style analogs of the seven standard figures.

Consumes only the CSV files written by the data pipeline's `figure`
command; never imports the computation library.  Output is one SVG and one
PNG per figure, with fixed hash salt and stripped timestamps so re-running
on identical CSV input reproduces identical vector bytes.

Usage:
    python render_fig.py --id 3 --csv-dir data/ --out out/fig3
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "casimir-shell-figures"
import matplotlib.pyplot as plt  # noqa: E402


@dataclass(frozen=True)
class Panel:
    csv_name: str
    title: str
    xlabel: str
    ylabel: str
    xscale: str = "linear"
    yscale: str = "linear"


@dataclass(frozen=True)
class FigureSpec:
    figure_id: int
    panels: tuple[Panel, ...]
    series_per_panel: int


# first three series follow the blue-solid / red-dotted / black-dashed idiom
STYLES = [("tab:blue", "solid"), ("tab:red", "dotted"), ("black", "dashed"),
          ("tab:green", "dashdot"), ("tab:purple", (0, (3, 1, 1, 1)))]

FIGSPECS: dict[int, FigureSpec] = {
    1: FigureSpec(1, (Panel("fig1.csv", "low-temperature bracket", "xi", "bracket"),), 3),
    2: FigureSpec(2, (
        Panel("fig2_exact.csv", "exact free energy", "aT", "a F", xscale="log"),
        Panel("fig2_lowT.csv", "low-temperature form", "aT", "a F", xscale="log"),
    ), 3),
    3: FigureSpec(3, (
        Panel("fig3_exact.csv", "exact / strong-coupling t^4 law", "aT", "ratio", xscale="log"),
        Panel("fig3_lowT.csv", "low-T form / strong-coupling t^4 law", "aT", "ratio", xscale="log"),
    ), 3),
    4: FigureSpec(4, (
        Panel("fig4_exact.csv", "exact / weak-coupling t^2 law", "aT", "ratio"),
        Panel("fig4_lowT.csv", "low-T form / weak-coupling t^2 law", "aT", "ratio"),
    ), 3),
    5: FigureSpec(5, (
        Panel("fig5_exact.csv", "exact / strong-coupling t^4 law", "lambda0", "ratio", xscale="log"),
        Panel("fig5_lowT.csv", "low-T form / strong-coupling t^4 law", "lambda0", "ratio", xscale="log"),
    ), 3),
    6: FigureSpec(6, (
        Panel("fig6.csv", "exact / order-lambda0 form", "aT", "ratio"),
    ), 3),
    7: FigureSpec(7, (
        Panel("fig7.csv", "order-lambda0 free energy and its limits", "alpha",
              "pi aF / lambda0", xscale="log", yscale="log"),
    ), 3),
}


class RenderError(RuntimeError):
    pass


def read_panel_csv(path: str):
    """Read a wide CSV: first column is the axis, the rest are series."""
    if not os.path.exists(path):
        raise RenderError(f"missing CSV file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise RenderError(f"empty CSV file: {path}")
    header = rows[0]
    if len(header) < 2 or len(rows) < 2:
        raise RenderError(f"no data rows in {path}")
    try:
        data = [[float(v) for v in row] for row in rows[1:]]
    except ValueError as exc:
        raise RenderError(f"non-numeric cell in {path}: {exc}") from None
    cols = list(zip(*data))
    return header, cols


def check_panel(path: str, header, cols, expected_series: int):
    n_series = len(header) - 1
    if n_series != expected_series:
        raise RenderError(
            f"{path}: expected {expected_series} series, found {n_series} "
            f"(columns {header[1:]})")
    axis = cols[0]
    if not all(b > a for a, b in zip(axis, axis[1:])):
        raise RenderError(f"{path}: axis column {header[0]!r} is not strictly increasing")
    for name in header[1:]:
        if not name:
            raise RenderError(f"{path}: empty series column name")


def render(figure_id: int, csv_dir: str, out_base: str) -> dict:
    """Render one figure; returns metadata (per-panel series counts, paths)."""
    spec = FIGSPECS.get(figure_id)
    if spec is None:
        raise RenderError(f"figure id must be one of {sorted(FIGSPECS)}, got {figure_id}")

    panels_data = []
    for panel in spec.panels:
        path = os.path.join(csv_dir, panel.csv_name)
        header, cols = read_panel_csv(path)
        check_panel(path, header, cols, spec.series_per_panel)
        panels_data.append((panel, header, cols))

    n = len(spec.panels)
    fig, axes = plt.subplots(1, n, figsize=(5.0 * n, 3.6), squeeze=False)
    for ax, (panel, header, cols) in zip(axes[0], panels_data):
        for i, series in enumerate(header[1:]):
            color, ls = STYLES[i % len(STYLES)]
            ax.plot(cols[0], cols[1 + i], color=color, linestyle=ls, label=series)
        ax.set_title(panel.title, fontsize=10)
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.set_xscale(panel.xscale)
        ax.set_yscale(panel.yscale)
        ax.legend(fontsize=7)
    fig.tight_layout()

    out_svg = out_base + ".svg"
    out_png = out_base + ".png"
    os.makedirs(os.path.dirname(os.path.abspath(out_svg)), exist_ok=True)
    fig.savefig(out_svg, metadata={"Date": None})
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return {
        "figure_id": figure_id,
        "panels": [p.csv_name for p in spec.panels],
        "series_counts": [len(h) - 1 for _, h, _ in panels_data],
        "svg": out_svg,
        "png": out_png,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--id", type=int, required=True, help="figure id, 1..7")
    ap.add_argument("--csv-dir", required=True, help="directory holding the figure CSVs")
    ap.add_argument("--out", default=None,
                    help="output path base (default: <csv-dir>/fig<id>)")
    args = ap.parse_args(argv)
    out_base = args.out or os.path.join(args.csv_dir, f"fig{args.id}")
    try:
        meta = render(args.id, args.csv_dir, out_base)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {meta['svg']} and {meta['png']} "
          f"({'+'.join(str(c) for c in meta['series_counts'])} series)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
