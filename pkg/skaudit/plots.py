"""
plots.py

This module renders the CSV files written by a sweep as SVG plots: Delta vs n,
D/sqrt(n) vs n with the Gaussian floor as a horizontal reference, delta vs n and
the M-curve of delta. Reruns on the same CSV files give byte-identical SVGs.
"""

import csv
import logging
import os
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update(
    {
        "font.family": "DejaVu Sans",
        "axes.unicode_minus": False,
        "svg.hashsalt": "skaudit",
        "svg.fonttype": "path",
    }
)
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import BOUND_FIELDS, CURVE_FIELDS, DELTA_FIELDS, SECURITY_FIELDS, SKIPPED  # noqa: E402

logger = logging.getLogger(__name__)

_KINDS = {
    "security": SECURITY_FIELDS,
    "delta": DELTA_FIELDS,
    "curve": CURVE_FIELDS,
    "bounds": BOUND_FIELDS,
}


def _read_table(path: str) -> Dict[str, List[List[str]]]:
    """
    Reads a sweep CSV and tells which table it is from its header.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the header matches no sweep table or there are no data rows.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"CSV file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as file:
        rows = list(csv.reader(file))
    if not rows:
        raise ValueError(f"CSV file {path} is empty.")
    header, data = rows[0], rows[1:]
    for kind, fields in _KINDS.items():
        if header == fields:
            break
    else:
        raise ValueError(f"CSV file {path} has unexpected columns: {', '.join(header)}")
    data = [row for row in data if SKIPPED not in row]
    if not data:
        raise ValueError(f"CSV file {path} has no data rows.")
    return {kind: data}


def _medians_by_n(rows: List[List[str]], column: int) -> Dict[int, float]:
    values: Dict[int, List[float]] = {}
    for row in rows:
        values.setdefault(int(row[0]), []).append(float(row[column]))
    return {n: float(np.median(v)) for n, v in sorted(values.items())}


def _save(fig, path: str) -> str:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Wrote %s", path)
    return path


def _line_plot(points: Dict[int, float], title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    ax.plot(list(points), list(points.values()), marker="o")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_csvs(paths: List[str], output_dir: str) -> List[str]:
    """
    Renders one SVG per metric found in the given CSV files.

    Every file is read and validated before anything is written, so a bad input
    leaves no partial output.

    Returns:
        List[str]: Paths of the SVG files written.

    Raises:
        FileNotFoundError: If a CSV file does not exist.
        ValueError: If a CSV file is empty or has unexpected columns.
    """
    tables: Dict[str, List[List[str]]] = {}
    for path in paths:
        tables.update(_read_table(path))
    os.makedirs(output_dir, exist_ok=True)
    written = []

    if "security" in tables:
        rows = tables["security"]
        fig, _ = _line_plot(_medians_by_n(rows, 4), "Variational distance to the ideal key",
                            "n", "median Delta")
        written.append(_save(fig, os.path.join(output_dir, "delta_metric_vs_n.svg")))

        fig, ax = _line_plot(_medians_by_n(rows, 7), "Root-n scaled divergence", "n", "median D/sqrt(n)")
        if "bounds" in tables:
            floors = [float(row[3]) for row in tables["bounds"] if float(row[1]) == 0.0]
            if floors:
                ax.axhline(floors[0], linestyle="--", color="gray", label="Gaussian floor at b = 0")
                ax.legend(loc="best", fontsize=8)
        written.append(_save(fig, os.path.join(output_dir, "divergence_vs_n.svg")))

    if "delta" in tables:
        points = {int(row[0]): float(row[1]) for row in tables["delta"]}
        fig, ax = _line_plot(points, "Optimal distance to a uniform key", "n", "delta")
        ax.set_ylim(0.0, 1.0)
        written.append(_save(fig, os.path.join(output_dir, "delta_oracle_vs_n.svg")))

    if "curve" in tables:
        fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
        curves: Dict[int, List[List[float]]] = {}
        for row in tables["curve"]:
            curves.setdefault(int(row[0]), []).append([int(row[1]), float(row[2])])
        for n, points in sorted(curves.items()):
            points = np.array(points)
            ax.plot(points[:, 0], points[:, 1], label=f"n={n}")
        ax.set_xscale("log")
        ax.set_title("Distance to a uniform key on M-sets")
        ax.set_xlabel("M")
        ax.set_ylabel("min over families")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        written.append(_save(fig, os.path.join(output_dir, "delta_curve.svg")))
    return written
