"""Mini-batch training with early stopping, and split evaluation.

Metrics convention: MSE and MAE average over every (sample, horizon step)
pair, samples pooled across channels, all in standardized units. The
per-horizon arrays break the same totals down by step, so their mean equals
the aggregate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .data import DataSplits, WindowIndex


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 100
    learning_rate: float = 1e-3
    patience: int = 5
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_mse: float
    seconds: float


@dataclass
class TrainResult:
    log: list[EpochRecord]
    best_val_mse: float
    best_epoch: int
    epochs_run: int
    final_train_loss: float
    stopped_early: bool


@dataclass
class MetricsReport:
    """Aggregate and per-horizon-step errors of one split."""

    mse: float
    mae: float
    per_horizon_mse: np.ndarray
    per_horizon_mae: np.ndarray
    num_samples: int
    info: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str]]:
        out = [
            ("mse", f"{self.mse:.17g}"),
            ("mae", f"{self.mae:.17g}"),
            ("num_samples", str(self.num_samples)),
        ]
        out.extend((str(k), str(v)) for k, v in self.info.items())
        return out


def _batched_predictions(model, values: np.ndarray, index: WindowIndex,
                         batch_size: int = 256):
    """Yield (prediction, target) batches over an index, in order."""
    for start in range(0, len(index), batch_size):
        sel = np.arange(start, min(start + batch_size, len(index)))
        x, y = index.gather(values, sel)
        yield model.forward(x), y


def _split_mse(model, values: np.ndarray, index: WindowIndex, batch_size: int = 256) -> float:
    # built on mse_loss so the training-loop numbers and evaluate() stay two
    # genuinely different accumulations of the same convention
    total = 0.0
    count = 0
    for pred, y in _batched_predictions(model, values, index, batch_size):
        loss, _ = nn.mse_loss(pred, y)
        total += loss * y.size
        count += y.size
    if count == 0:
        raise ValueError("split has no windows to evaluate")
    return total / count


def evaluate(model, splits: DataSplits, which: str = "test",
             batch_size: int = 256, info: dict | None = None) -> MetricsReport:
    """MSE/MAE over a split, aggregated and per horizon step."""
    index = splits.index_for(which)
    if len(index) == 0:
        raise ValueError(f"{which} split has no windows to evaluate")
    horizon = index.horizon
    sq = np.zeros(horizon)
    ab = np.zeros(horizon)
    num = 0
    for pred, y in _batched_predictions(model, splits.values, index, batch_size):
        diff = pred - y
        sq += np.sum(diff * diff, axis=0)
        ab += np.sum(np.abs(diff), axis=0)
        num += diff.shape[0]
    report_info = {"split": which, "horizon": horizon}
    report_info.update(info or {})
    return MetricsReport(
        mse=float(sq.sum() / (num * horizon)),
        mae=float(ab.sum() / (num * horizon)),
        per_horizon_mse=sq / num,
        per_horizon_mae=ab / num,
        num_samples=num,
        info=report_info,
    )


def _snapshot(model) -> list[np.ndarray]:
    return [p.value.copy() for p in model.parameters()]


def _restore(model, snapshot: list[np.ndarray]) -> None:
    for p, saved in zip(model.parameters(), snapshot):
        p.value[:] = saved


def train(model, splits: DataSplits, config: TrainConfig,
          log_fn=None) -> TrainResult:
    """Adam on mini-batch MSE with best-validation-checkpoint early stopping.

    Stops at max_epochs or once validation MSE has failed to improve for
    max(patience, 1) consecutive epochs; the parameters of the best
    validation epoch are restored before returning. Identical inputs and
    seed give an identical run.
    """
    if len(splits.train) == 0:
        raise ValueError("training split has no windows")
    if len(splits.val) == 0:
        raise ValueError("validation split has no windows, early stopping needs one")
    rng = np.random.default_rng(config.seed)
    optimizer = nn.Adam(model.parameters(), learning_rate=config.learning_rate)
    order = np.arange(len(splits.train))
    limit = max(config.patience, 1)

    log: list[EpochRecord] = []
    best_val = np.inf
    best_epoch = 0
    best_params = _snapshot(model)
    bad_epochs = 0
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        if config.shuffle:
            rng.shuffle(order)
        sq_sum = 0.0
        n_entries = 0
        for batch_i, start in enumerate(range(0, order.size, config.batch_size), start=1):
            sel = order[start:start + config.batch_size]
            x, y = splits.train.gather(splits.values, sel)
            trace = model.forward_trace(x)
            loss, grad = nn.mse_loss(trace.prediction, y)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {batch_i}"
                )
            model.zero_grads()
            model.backward(trace, x, grad)
            optimizer.step()
            sq_sum += loss * grad.size
            n_entries += grad.size
        train_loss = sq_sum / n_entries
        val_mse = _split_mse(model, splits.values, splits.val)
        record = EpochRecord(epoch, train_loss, val_mse, time.perf_counter() - started)
        log.append(record)
        if log_fn is not None:
            log_fn(record)

        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_params = _snapshot(model)
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= limit:
                stopped_early = True
                break

    _restore(model, best_params)
    final_train_loss = _split_mse(model, splits.values, splits.train)
    return TrainResult(
        log=log,
        best_val_mse=float(best_val),
        best_epoch=best_epoch,
        epochs_run=len(log),
        final_train_loss=final_train_loss,
        stopped_early=stopped_early,
    )
