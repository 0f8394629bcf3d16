"""Experiment orchestration: single runs and grids over model/L/T/seed.

A run trains one model on one dataset split and leaves behind a manifest,
a training log, metric files, a checkpoint, and a loss figure. A grid is
the cross product of models, lookbacks, horizons, and seeds; each cell is
a run in its own subdirectory, failures are recorded without stopping the
sweep, and the collected rows feed the summary table, plot data, and
figures.
"""
from __future__ import annotations

import csv
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import nn, report
from .config import ExperimentConfig, resolve_train_config, validate_config
from .models import build_model
from .train import MetricsReport, TrainResult, evaluate, train


@dataclass
class RunResult:
    run_dir: Path
    metrics_row: dict
    train_result: TrainResult
    report: MetricsReport


@dataclass
class GridResult:
    out_dir: Path
    rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _load_table(cfg: ExperimentConfig) -> data_mod.TimeSeriesTable:
    time_column = cfg.data.time_column
    table = data_mod.load_csv(cfg.data.path, delimiter=cfg.data.delimiter,
                              time_column=time_column)
    if cfg.data.max_rows > 0:
        table = table.head(cfg.data.max_rows)
    return table


def _manifest_entries(cfg: ExperimentConfig, table, splits, model, tcfg,
                      result: TrainResult, metrics: MetricsReport) -> dict:
    entries = {
        "data.path": cfg.data.path,
        "data.delimiter": cfg.data.delimiter,
        "data.time_column": cfg.data.time_column,
        "data.time_column_detected": table.timestamps is not None,
        "data.max_rows": cfg.data.max_rows,
        "data.rows_used": table.num_timestamps,
        "data.channels": table.num_channels,
        "data.dropped_rows": table.dropped_rows,
        "data.train_fraction": cfg.data.train_fraction,
        "data.val_fraction": cfg.data.val_fraction,
        "data.test_fraction": cfg.data.test_fraction,
        "split.train": f"[{splits.spec.train.start}, {splits.spec.train.stop})",
        "split.val": f"[{splits.spec.val.start}, {splits.spec.val.stop})",
        "split.test": f"[{splits.spec.test.start}, {splits.spec.test.stop})",
        "split.train_windows": len(splits.index_for("train")),
        "split.val_windows": len(splits.index_for("val")),
        "split.test_windows": len(splits.index_for("test")),
        "scaler.constant_channels": list(splits.scaler.constant_channels),
    }
    for i, name in enumerate(table.channel_names):
        entries[f"scaler.mean.{name}"] = float(splits.scaler.mean[i])
        entries[f"scaler.std.{name}"] = float(splits.scaler.std[i])
    entries.update({f"model.{k}": v for k, v in model.describe().items()})
    entries.update({
        "train.batch_size": tcfg.batch_size,
        "train.max_epochs": tcfg.max_epochs,
        "train.learning_rate": tcfg.learning_rate,
        "train.patience": tcfg.patience,
        "train.shuffle": tcfg.shuffle,
        "train.seed": tcfg.seed,
        "result.epochs_run": result.epochs_run,
        "result.best_epoch": result.best_epoch,
        "result.best_val_mse": result.best_val_mse,
        "result.final_train_loss": result.final_train_loss,
        "result.stopped_early": result.stopped_early,
        "result.test_mse": metrics.mse,
        "result.test_mae": metrics.mae,
    })
    return entries


def run_experiment(cfg: ExperimentConfig, *, table=None, out_dir=None,
                   echo=None) -> RunResult:
    """Train one model per the config and write all artifacts to out_dir."""
    validate_config(cfg)
    if table is None:
        table = _load_table(cfg)
    elif cfg.data.max_rows > 0 and table.num_timestamps > cfg.data.max_rows:
        table = table.head(cfg.data.max_rows)
    out_dir = Path(out_dir if out_dir is not None else cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    splits = data_mod.prepare(table, cfg.model.lookback, cfg.model.horizon,
                              fractions=cfg.data.fractions)
    rng = np.random.default_rng(cfg.train.seed)
    model = build_model(cfg.model.type, cfg.model.lookback, cfg.model.horizon,
                        num_qubits=cfg.model.num_qubits,
                        num_layers=cfg.model.num_layers,
                        kernel=cfg.model.kernel, rng=rng)
    tcfg = resolve_train_config(cfg.train, cfg.model.type)

    log_fn = None
    if echo is not None:
        def log_fn(rec):
            echo(f"epoch {rec.epoch}: train {rec.train_loss:.6f} "
                 f"val {rec.val_mse:.6f} ({rec.seconds:.1f}s)")
    result = train(model, splits, tcfg, log_fn=log_fn)
    metrics = evaluate(model, splits, "test",
                       info={"model": cfg.model.type,
                             "lookback": cfg.model.lookback,
                             "horizon": cfg.model.horizon,
                             "seed": cfg.train.seed})

    row = {"model": cfg.model.type, "lookback": cfg.model.lookback,
           "horizon": cfg.model.horizon, "seed": cfg.train.seed,
           "mse": metrics.mse, "mae": metrics.mae, "status": "ok", "error": ""}

    report.write_manifest(out_dir / "manifest.txt",
                          _manifest_entries(cfg, table, splits, model, tcfg,
                                            result, metrics))
    with open(out_dir / "train_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_mse", "seconds"])
        for rec in result.log:
            writer.writerow([rec.epoch, f"{rec.train_loss:.17g}",
                             f"{rec.val_mse:.17g}", f"{rec.seconds:.3f}"])
    with open(out_dir / "metrics.txt", "w") as fh:
        for key, value in metrics.rows():
            fh.write(f"{key} = {value}\n")
    report.write_results_csv(out_dir / "metrics.csv", [row])
    meta = {str(k): str(v) for k, v in model.describe().items()}
    meta["seed"] = str(cfg.train.seed)
    nn.save_params(out_dir / "checkpoint.txt", model.parameters(), meta=meta)
    report.render_loss_figure(out_dir / "loss.png", result.log)
    return RunResult(run_dir=out_dir, metrics_row=row, train_result=result,
                     report=metrics)


def run_grid(cfg: ExperimentConfig, models: list[str], lookbacks: list[int],
             horizons: list[int], seeds: list[int], *, out_dir=None,
             echo=None) -> GridResult:
    """Run every model/lookback/horizon/seed cell; never stop on one failure."""
    for label, items in (("models", models), ("lookbacks", lookbacks),
                         ("horizons", horizons), ("seeds", seeds)):
        if not items:
            raise ValueError(f"grid needs a non-empty {label} list")
    out_dir = Path(out_dir if out_dir is not None else cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    say = echo if echo is not None else (lambda msg: None)

    # one parse of the dataset shared across every cell
    base_table = _load_table(cfg)
    grid = GridResult(out_dir=out_dir)
    for model_type in models:
        for lookback in lookbacks:
            for horizon in horizons:
                for seed in seeds:
                    name = f"{model_type}_L{lookback}_T{horizon}_seed{seed}"
                    cell = replace(
                        cfg,
                        model=replace(cfg.model, type=model_type,
                                      lookback=lookback, horizon=horizon),
                        train=replace(cfg.train, seed=seed),
                    )
                    say(f"[{name}] starting")
                    try:
                        run = run_experiment(cell, table=base_table,
                                             out_dir=out_dir / name, echo=echo)
                    except Exception as exc:
                        grid.rows.append({
                            "model": model_type, "lookback": lookback,
                            "horizon": horizon, "seed": seed,
                            "mse": "", "mae": "", "status": "failed",
                            "error": f"{type(exc).__name__}: {exc}",
                        })
                        grid.failures.append(f"{name}: {type(exc).__name__}: {exc}")
                        say(f"[{name}] FAILED: {type(exc).__name__}: {exc}")
                        (out_dir / name).mkdir(parents=True, exist_ok=True)
                        (out_dir / name / "error.txt").write_text(
                            traceback.format_exc())
                        continue
                    grid.rows.append(run.metrics_row)
                    say(f"[{name}] test mse {run.metrics_row['mse']:.6f} "
                        f"mae {run.metrics_row['mae']:.6f}")

    report.write_results_csv(out_dir / "results.csv", grid.rows)
    tables = [report.format_results_table(grid.rows, models, lookback,
                                          horizons, seeds)
              for lookback in lookbacks]
    (out_dir / "results.txt").write_text("\n".join(tables))
    for horizon in horizons:
        report.write_sweep_data(out_dir / f"sweep_T{horizon}.csv", grid.rows,
                                models, lookbacks, horizon)
        if len(lookbacks) > 1:
            report.render_sweep_figure(out_dir / f"sweep_T{horizon}.png",
                                       grid.rows, models, lookbacks, horizon)
    for lookback in lookbacks:
        report.render_overview_figure(out_dir / f"overview_L{lookback}.png",
                                      grid.rows, models, lookback, horizons)
    if grid.failures:
        (out_dir / "failures.txt").write_text("\n".join(grid.failures) + "\n")
    return grid
