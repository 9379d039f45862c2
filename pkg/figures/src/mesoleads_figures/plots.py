"""Figure renderers for the scenario CSV schema.

Three figure kinds are supported: the steady-state infidelity sweep (one
log-scale panel per temperature, one curve per chain size), the rate
comparison grid (one panel per (temperature, lead-size) cell with the
embedding and semigroup rates), and the cumulative-budget decomposition
(the Sigma - Sigma_ext curve over stacked shaded contributions).

Rendering never recomputes physics: every plotted value is a CSV cell.
Output is written as both SVG and PNG with pinned style settings so that a
given input reproduces byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

__all__ = [
    "SchemaError",
    "load_frame",
    "budget_stack_series",
    "plot_infidelity",
    "plot_rates",
    "plot_budget",
]

RESIDUAL_WARN = 1e-3

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
    "svg.hashsalt": "mesoleads-figures",
    "svg.fonttype": "none",
    "path.simplify": False,
}


class SchemaError(ValueError):
    """The CSV does not carry the columns the figure kind requires."""


def load_frame(csv_path, required) -> pd.DataFrame:
    path = Path(csv_path)
    if not path.exists():
        raise SchemaError(f"input file {path} does not exist")
    frame = pd.read_csv(path)
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} lacks required columns {missing}")
    if len(frame) == 0:
        raise SchemaError(f"{path} contains no data rows")
    return frame


def _save(fig, out_base) -> list:
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix in (".svg", ".png"):
        target = out_base.with_suffix(suffix)
        # a fixed metadata date keeps the SVG bytes reproducible
        metadata = {"Date": None} if suffix == ".svg" else None
        fig.savefig(target, metadata=metadata)
        written.append(target)
    plt.close(fig)
    return written


def plot_infidelity(csv_path, out_base) -> list:
    """Render the thermalization sweep: one log-scale panel per temperature,
    one curve per chain size, infidelity against the number of lead modes."""
    frame = load_frame(csv_path, ["N", "L", "T", "infidelity"])
    temperatures = sorted(frame["T"].unique())
    sizes = sorted(frame["N"].unique())
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(
            1, len(temperatures), figsize=(3.2 * len(temperatures), 3.0), sharey=True
        )
        axes = np.atleast_1d(axes)
        for ax, temperature in zip(axes, temperatures):
            panel = frame[frame["T"] == temperature]
            for size in sizes:
                curve = panel[panel["N"] == size].sort_values("L")
                ax.plot(curve["L"], curve["infidelity"], marker="o", label=f"N = {int(size)}")
            ax.set_yscale("log")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("lead modes L")
            ax.set_title(f"T = {temperature:g}")
        axes[0].set_ylabel("infidelity")
        axes[0].legend()
        fig.tight_layout()
        return _save(fig, out_base)


def plot_rates(csv_path, out_base) -> list:
    """Render the rate-comparison grid: one panel per (T, L) cell with the
    embedding rate and the semigroup rate over time."""
    frame = load_frame(csv_path, ["T", "L", "t", "sigma_ext", "sigma_spohn"])
    temperatures = sorted(frame["T"].unique())
    sizes = sorted(frame["L"].unique())
    missing = [
        (float(temperature), int(size))
        for temperature in temperatures
        for size in sizes
        if frame[(frame["T"] == temperature) & (frame["L"] == size)].empty
    ]
    if missing:
        raise SchemaError(f"missing (T, L) cells: {missing}")
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(
            len(temperatures),
            len(sizes),
            figsize=(3.4 * len(sizes), 2.6 * len(temperatures)),
            squeeze=False,
            sharex=True,
        )
        for i, temperature in enumerate(temperatures):
            for j, size in enumerate(sizes):
                cell = frame[(frame["T"] == temperature) & (frame["L"] == size)]
                cell = cell.sort_values("t")
                ax = axes[i][j]
                ax.plot(cell["t"], cell["sigma_ext"], label="embedding rate")
                ax.plot(cell["t"], cell["sigma_spohn"], "--", label="semigroup rate")
                ax.set_title(f"T = {temperature:g}, L = {int(size)}")
                if i == len(temperatures) - 1:
                    ax.set_xlabel("t")
                if j == 0:
                    ax.set_ylabel("entropy production rate")
        axes[0][0].legend()
        fig.tight_layout()
        return _save(fig, out_base)


def budget_stack_series(frame: pd.DataFrame):
    """Stacked contributions of the budget figure.

    Returns (labels, parts, lhs, rhs): the per-lead free-energy columns and
    the correlation column, in stacking order; their running sum reproduces
    the right-hand side column exactly.
    """
    lead_cols = sorted(
        (c for c in frame.columns if c.startswith("dF_L.")),
        key=lambda c: int(c.split(".", 1)[1]),
    )
    if not lead_cols:
        raise SchemaError("no dF_L.<a> columns found")
    labels = [f"free energy, lead {c.split('.', 1)[1]}" for c in lead_cols]
    labels.append("correlations")
    parts = [frame[c].to_numpy() for c in lead_cols]
    parts.append(frame["mutual_or_total_corr"].to_numpy())
    return labels, parts, frame["budget_lhs"].to_numpy(), frame["budget_rhs"].to_numpy()


def plot_budget(csv_path, out_base) -> list:
    """Render the cumulative budget: Sigma - Sigma_ext over the stacked
    free-energy and correlation contributions; annotate if the recorded
    residual exceeds 1e-3 anywhere."""
    frame = load_frame(
        csv_path,
        ["t", "mutual_or_total_corr", "budget_lhs", "budget_rhs", "budget_residual"],
    )
    labels, parts, lhs, rhs = budget_stack_series(frame)
    t = frame["t"].to_numpy()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.6, 3.2))
        base = np.zeros_like(t)
        for label, part in zip(labels, parts):
            ax.fill_between(t, base, base + part, alpha=0.45, label=label)
            base = base + part
        ax.plot(t, lhs, color="black", label="entropy-production difference")
        ax.set_xlabel("t")
        ax.set_ylabel("cumulative entropy (nats)")
        worst = float(np.abs(frame["budget_residual"]).max())
        if worst > RESIDUAL_WARN:
            ax.text(
                0.02,
                0.97,
                f"warning: budget residual up to {worst:.1e}",
                transform=ax.transAxes,
                va="top",
                color="crimson",
                fontsize=8,
            )
        ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, out_base)
