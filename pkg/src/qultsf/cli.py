"""Command line interface.

    qultsf run --config exp.ini [--set model.lookback=48 ...]
    qultsf grid --config exp.ini --models qultsf,linear --lookbacks 48,96 \
                --horizons 96,720 --seeds 0,1,2
    qultsf synth-data --output data.csv --rows 52696 --channels 21 --seed 0

`run` trains a single model and writes its artifacts; `grid` sweeps the
cross product of models, lookbacks, horizons, and seeds and summarizes the
rows into a table, plot data, and figures. `synth-data` writes a synthetic
multivariate series for exercising the pipeline when no dataset is at hand.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, apply_overrides, load_config
from .data import DataError
from .models import MODEL_TYPES
from .runner import run_experiment, run_grid
from .synth import synth_csv
from .train import DivergenceError


def _int_list(raw: str) -> list[int]:
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")


def _model_list(raw: str) -> list[str]:
    models = [tok.strip() for tok in raw.split(",") if tok.strip() != ""]
    for model in models:
        if model not in MODEL_TYPES:
            raise argparse.ArgumentTypeError(
                f"unknown model {model!r}, expected one of {MODEL_TYPES}")
    return models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qultsf",
                                     description="hybrid quantum-classical "
                                                 "long-term forecasting")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train and evaluate one model")
    run_p.add_argument("--config", required=True, help="experiment config file")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config field (repeatable)")
    run_p.add_argument("--output-dir", default=None)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--quiet", action="store_true",
                       help="suppress per-epoch progress lines")

    grid_p = sub.add_parser("grid", help="sweep model/lookback/horizon/seed")
    grid_p.add_argument("--config", required=True)
    grid_p.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE")
    grid_p.add_argument("--models", type=_model_list, default=None,
                        help="comma-separated model types")
    grid_p.add_argument("--lookbacks", type=_int_list, default=None)
    grid_p.add_argument("--horizons", type=_int_list, default=None)
    grid_p.add_argument("--seeds", type=_int_list, default=None)
    grid_p.add_argument("--output-dir", default=None)
    grid_p.add_argument("--quiet", action="store_true")

    synth_p = sub.add_parser("synth-data", help="write a synthetic dataset")
    synth_p.add_argument("--output", required=True)
    synth_p.add_argument("--rows", type=int, default=52696)
    synth_p.add_argument("--channels", type=int, default=21)
    synth_p.add_argument("--seed", type=int, default=0)
    return parser


def _load(args) -> "ExperimentConfig":
    cfg = load_config(args.config)
    apply_overrides(cfg, args.overrides)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if getattr(args, "seed", None) is not None:
        cfg.train.seed = args.seed
    return cfg


def _cmd_run(args, echo) -> int:
    cfg = _load(args)
    run = run_experiment(cfg, echo=None if args.quiet else echo)
    row = run.metrics_row
    echo(f"model={row['model']} lookback={row['lookback']} "
         f"horizon={row['horizon']} seed={row['seed']} "
         f"mse={row['mse']:.6f} mae={row['mae']:.6f}")
    echo(f"artifacts in {run.run_dir}")
    return 0


def _cmd_grid(args, echo) -> int:
    cfg = _load(args)
    models = args.models if args.models is not None else [cfg.model.type]
    lookbacks = args.lookbacks if args.lookbacks is not None else [cfg.model.lookback]
    horizons = args.horizons if args.horizons is not None else [cfg.model.horizon]
    seeds = args.seeds if args.seeds is not None else [cfg.train.seed]
    grid = run_grid(cfg, models, lookbacks, horizons, seeds,
                    echo=None if args.quiet else echo)
    echo((grid.out_dir / "results.txt").read_text().rstrip())
    if grid.failures:
        echo(f"{len(grid.failures)} cell(s) failed:")
        for line in grid.failures:
            echo(f"  {line}")
        return 1
    echo(f"artifacts in {grid.out_dir}")
    return 0


def _cmd_synth(args, echo) -> int:
    table = synth_csv(args.output, num_rows=args.rows,
                      num_channels=args.channels, seed=args.seed)
    echo(f"wrote {table.num_timestamps} rows x {table.num_channels} channels "
         f"to {args.output}")
    return 0


def main(argv: list[str] | None = None, echo=print) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, echo)
        if args.command == "grid":
            return _cmd_grid(args, echo)
        if args.command == "synth-data":
            return _cmd_synth(args, echo)
    except (ConfigError, DataError, DivergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(args.command)


def entry_point() -> None:
    sys.exit(main())
