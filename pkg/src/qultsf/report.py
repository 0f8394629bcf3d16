"""Result rendering: aligned text tables, plot-data files, and PNG figures.

Everything here consumes plain rows of {model, lookback, horizon, seed,
mse, mae} dictionaries so it stays decoupled from how the runs were made.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

RESULT_FIELDS = ("model", "lookback", "horizon", "seed", "mse", "mae", "status", "error")


def write_results_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in RESULT_FIELDS})


def _ok(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r.get("status", "ok") == "ok"]


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def aggregate(rows: list[dict], model: str, lookback: int, horizon: int,
              metric: str) -> tuple[float, float, int] | None:
    """Mean, std, and count of a metric over seeds; None if no runs match."""
    vals = [r[metric] for r in _ok(rows)
            if r["model"] == model and r["lookback"] == lookback
            and r["horizon"] == horizon]
    if not vals:
        return None
    mean, std = _mean_std(vals)
    return mean, std, len(vals)


def _cell(agg: tuple[float, float, int] | None) -> str:
    if agg is None:
        return "-"
    mean, std, count = agg
    if count > 1:
        return f"{mean:.3f}±{std:.3f}"
    return f"{mean:.3f}"


def format_results_table(rows: list[dict], models: list[str],
                         lookback: int, horizons: list[int],
                         seeds: list[int]) -> str:
    """One text table per lookback: horizons down, model MSE/MAE across."""
    header = ["horizon"]
    for model in models:
        header += [f"{model}_mse", f"{model}_mae"]
    body = []
    for horizon in horizons:
        line = [str(horizon)]
        for model in models:
            line.append(_cell(aggregate(rows, model, lookback, horizon, "mse")))
            line.append(_cell(aggregate(rows, model, lookback, horizon, "mae")))
        body.append(line)
    widths = [max(len(header[i]), *(len(line[i]) for line in body))
              for i in range(len(header))]
    out = []
    if len(seeds) > 1:
        out.append(f"mean±std over seeds {list(seeds)}, lookback {lookback}")
    else:
        out.append(f"seed {seeds[0]}, lookback {lookback}")
    out.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    out.append("  ".join("-" * w for w in widths))
    for line in body:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)))
    return "\n".join(out) + "\n"


def write_sweep_data(path, rows: list[dict], models: list[str],
                     lookbacks: list[int], horizon: int) -> None:
    """Per-horizon plot data: lookback ascending, one MSE column per model."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lookback"] + [f"{m}_mse" for m in models])
        for lookback in sorted(lookbacks):
            line: list = [lookback]
            for model in models:
                agg = aggregate(rows, model, lookback, horizon, "mse")
                line.append("" if agg is None else f"{agg[0]:.17g}")
            writer.writerow(line)


def render_sweep_figure(path, rows: list[dict], models: list[str],
                        lookbacks: list[int], horizon: int) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for model in models:
        xs, ys = [], []
        for lookback in sorted(lookbacks):
            agg = aggregate(rows, model, lookback, horizon, "mse")
            if agg is not None:
                xs.append(lookback)
                ys.append(agg[0])
        if xs:
            ax.plot(xs, ys, marker="o", label=model)
    ax.set_xlabel("lookback length")
    ax.set_ylabel("test MSE")
    ax.set_title(f"horizon {horizon}")
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_overview_figure(path, rows: list[dict], models: list[str],
                           lookback: int, horizons: list[int]) -> None:
    """Test MSE against horizon at a fixed lookback, one line per model."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for model in models:
        xs, ys = [], []
        for horizon in sorted(horizons):
            agg = aggregate(rows, model, lookback, horizon, "mse")
            if agg is not None:
                xs.append(horizon)
                ys.append(agg[0])
        if xs:
            ax.plot(xs, ys, marker="o", label=model)
    ax.set_xlabel("forecast horizon")
    ax.set_ylabel("test MSE")
    ax.set_title(f"lookback {lookback}")
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_loss_figure(path, log) -> None:
    """Training curve: train loss and validation MSE per epoch."""
    epochs = [rec.epoch for rec in log]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(epochs, [rec.train_loss for rec in log], marker="o", label="train loss")
    ax.plot(epochs, [rec.val_mse for rec in log], marker="s", label="val MSE")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_manifest(path, entries: dict) -> None:
    """Human-readable key-value manifest, one `key = value` line each."""
    lines = []
    for key, value in entries.items():
        if isinstance(value, float):
            value = f"{value:.17g}"
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")
