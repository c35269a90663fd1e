"""Read regret-curve CSVs and render paper-style panel figures.

Input files follow the experiment harness schema::

    round,mean_cum_regret,stderr_cum_regret,mean_inst_regret,n_replications

Each panel shows one scenario; each CSV contributes one curve (the mean
cumulative regret) with a shaded band of +/- one standard error.  The
output is a pure function of the CSV bytes and the flags: fixed geometry,
no clock, no network.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ("round", "mean_cum_regret", "stderr_cum_regret",
                    "mean_inst_regret", "n_replications")


class SchemaError(ValueError):
    """A CSV does not match the harness curve schema."""


@dataclass(frozen=True)
class CurveData:
    label: str
    rounds: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


@dataclass(frozen=True)
class Panel:
    name: str
    csv_paths: tuple[str, ...]


def agent_label(path: str) -> str:
    """Legend label from the file name: the part after the last '__'."""
    stem = os.path.splitext(os.path.basename(path))[0]
    return stem.rsplit("__", 1)[-1]


def read_curve_csv(path: str) -> CurveData:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    for column in REQUIRED_COLUMNS:
        if column not in header:
            raise SchemaError(f"{path}: missing column {column!r}")
    idx = {column: header.index(column) for column in REQUIRED_COLUMNS}
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    try:
        rounds = np.array([float(r[idx["round"]]) for r in rows])
        mean = np.array([float(r[idx["mean_cum_regret"]]) for r in rows])
        stderr = np.array([float(r[idx["stderr_cum_regret"]]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: unparsable row ({exc})") from exc
    return CurveData(agent_label(path), rounds, mean, stderr)


def build_figure(panels: list[Panel], dpi: int = 100):
    """Assemble the figure: one panel per scenario, config-ordered curves."""
    if not panels:
        raise ValueError("at least one panel is required")
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.2), dpi=dpi,
                             squeeze=False)
    for ax, panel in zip(axes[0], panels):
        for path in panel.csv_paths:
            curve = read_curve_csv(path)
            line, = ax.plot(curve.rounds, curve.mean, label=curve.label,
                            linewidth=1.4)
            ax.fill_between(curve.rounds, curve.mean - curve.stderr,
                            curve.mean + curve.stderr,
                            color=line.get_color(), alpha=0.25, linewidth=0)
        ax.set_title(panel.name)
        ax.set_xlabel("round")
        ax.set_ylabel("cumulative regret")
        ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return fig


def render(panels: list[Panel], out_path: str, dpi: int = 100) -> None:
    """Write the figure to ``out_path`` (format from the extension)."""
    fig = build_figure(panels, dpi=dpi)
    try:
        fig.savefig(out_path, metadata={"Software": "regretplot"})
    finally:
        plt.close(fig)
