"""Delimited ingestion, chronological splits, train-only standardization,
and the sliding-window protocol.

The windowing rule: a window belongs to a split when its whole target range
lies inside that split. The lookback may reach back into the preceding
split (never before the start of the data), so evaluation uses every target
position the split owns.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for files or requests the ingestion/window protocol rejects."""


@dataclass
class TimeSeriesTable:
    """A fully numeric (timestamps, channels) matrix.

    `timestamps` keeps the raw strings of the first file column when one was
    present; they are never parsed and never enter the models, they only
    flow into manifests.
    """

    values: np.ndarray
    channel_names: list[str]
    timestamps: list[str] | None = None
    dropped_rows: int = 0

    @property
    def num_timestamps(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    def head(self, num_rows: int) -> TimeSeriesTable:
        """First `num_rows` timestamps as a new table."""
        if num_rows < 1:
            raise DataError(f"cannot truncate a table to {num_rows} rows")
        ts = self.timestamps[:num_rows] if self.timestamps is not None else None
        return TimeSeriesTable(self.values[:num_rows].copy(), list(self.channel_names),
                               ts, self.dropped_rows)


def _looks_like_time_column(header_cell: str, first_data_cell: str) -> bool:
    name = header_cell.strip().lower()
    if name in ("date", "time", "datetime", "timestamp"):
        return True
    try:
        float(first_data_cell)
        return False
    except ValueError:
        return True


def load_csv(path, delimiter: str = ",", time_column: str | bool = "auto",
             drop_bad_rows: bool = False) -> TimeSeriesTable:
    """Read a delimited file with a header row into a TimeSeriesTable.

    time_column: True/False force the first column's role; "auto" treats it
    as a timestamp when its header or first value is non-numeric. With
    drop_bad_rows=True, rows that fail to parse are skipped and counted
    instead of raising.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, expected a header row") from None
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows after the header")
    if len(header) < 1:
        raise DataError(f"{path}: header row is empty")

    if time_column == "auto":
        has_time = _looks_like_time_column(header[0], rows[0][0] if rows[0] else "")
    else:
        has_time = bool(time_column)
    first_channel = 1 if has_time else 0
    channel_names = [h.strip() for h in header[first_channel:]]
    if not channel_names:
        raise DataError(f"{path}: no value columns")

    width = len(header)
    values = np.empty((len(rows), len(channel_names)), dtype=np.float64)
    timestamps: list[str] | None = [] if has_time else None
    keep = 0
    dropped = 0
    for i, row in enumerate(rows):
        file_row = i + 2  # 1-based, counting the header line
        if len(row) != width:
            if drop_bad_rows:
                dropped += 1
                continue
            raise DataError(
                f"{path}: row {file_row} has {len(row)} fields, header has {width}"
            )
        try:
            values[keep] = [float(cell) for cell in row[first_channel:]]
        except ValueError as exc:
            if drop_bad_rows:
                dropped += 1
                continue
            raise DataError(f"{path}: row {file_row}: {exc}") from None
        if has_time:
            timestamps.append(row[0])
        keep += 1
    if keep == 0:
        raise DataError(f"{path}: every data row was rejected")
    return TimeSeriesTable(values[:keep].copy(), channel_names, timestamps, dropped)


@dataclass
class SplitSpec:
    """Three contiguous index ranges covering [0, n) in chronological order."""

    train: range
    val: range
    test: range
    fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)

    def as_dict(self) -> dict:
        return {
            "train": (self.train.start, self.train.stop),
            "val": (self.val.start, self.val.stop),
            "test": (self.test.start, self.test.stop),
            "fractions": self.fractions,
        }


def make_splits(num_timestamps: int,
                fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> SplitSpec:
    """Chronological train/val/test boundaries at floor(cumulative * n).

    The tiny nudge inside the floor absorbs float error in the cumulative
    sums (0.7 + 0.1 != 0.8 exactly) without moving genuine fractions.
    """
    if num_timestamps < 1:
        raise DataError(f"cannot split {num_timestamps} timestamps")
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise DataError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {fractions} (sum {sum(fractions)})")
    b1 = int(math.floor(fractions[0] * num_timestamps + 1e-6))
    b2 = int(math.floor((fractions[0] + fractions[1]) * num_timestamps + 1e-6))
    return SplitSpec(range(0, b1), range(b1, b2), range(b2, num_timestamps),
                     tuple(fractions))


@dataclass
class Standardizer:
    """Per-channel affine transform fit on the training range only."""

    mean: np.ndarray
    std: np.ndarray
    constant_channels: list[int] = field(default_factory=list)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


def standardize(table: TimeSeriesTable, split: SplitSpec) -> tuple[TimeSeriesTable, Standardizer]:
    """Z-score every channel using mean/std of the training range only.

    Channels constant over the training range get std 1 (and a warning), so
    they standardize to zero instead of dividing by zero.
    """
    train = table.values[split.train.start:split.train.stop]
    if train.shape[0] == 0:
        raise DataError("training range is empty, nothing to fit the standardizer on")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    constant = np.flatnonzero(std < 1e-12).tolist()
    if constant:
        names = [table.channel_names[c] for c in constant]
        warnings.warn(f"channels constant over the training range, std forced to 1: {names}")
        std = std.copy()
        std[constant] = 1.0
    scaler = Standardizer(mean, std, constant)
    out = TimeSeriesTable(scaler.transform(table.values), list(table.channel_names),
                          table.timestamps, table.dropped_rows)
    return out, scaler


@dataclass
class WindowSample:
    """One supervised example: `target[0]` is the value at start_time + L."""

    lookback: np.ndarray
    target: np.ndarray
    channel: int
    start_time: int


def window_starts(split: range, lookback: int, horizon: int) -> range:
    """Target start positions owned by a split.

    The earliest is bounded below by the lookback (the window may reach into
    earlier splits but not before index 0); the latest leaves room for the
    full horizon inside the split.
    """
    if lookback < 1 or horizon < 1:
        raise DataError(f"lookback and horizon must be positive, got ({lookback}, {horizon})")
    first = max(split.start, lookback)
    last = split.stop - horizon
    return range(first, last + 1)


def window_iter(table: TimeSeriesTable, split: range, lookback: int, horizon: int,
                channel: int):
    """Yield WindowSamples for one channel, ordered by start_time ascending."""
    if not 0 <= channel < table.num_channels:
        raise DataError(f"channel {channel} out of range for {table.num_channels} channels")
    values = table.values[:, channel]
    for t0 in window_starts(split, lookback, horizon):
        yield WindowSample(
            lookback=values[t0 - lookback:t0],
            target=values[t0:t0 + horizon],
            channel=channel,
            start_time=t0 - lookback,
        )


@dataclass
class WindowIndex:
    """All (channel, target-start) pairs of a split, gatherable in batches."""

    channel: np.ndarray  # (S,)
    t0: np.ndarray       # (S,)
    lookback: int
    horizon: int

    def __len__(self) -> int:
        return self.channel.size

    def gather(self, values: np.ndarray, sel=None) -> tuple[np.ndarray, np.ndarray]:
        """Materialize (X, Y) = (lookbacks, targets) for selected windows."""
        ch = self.channel if sel is None else self.channel[sel]
        t0 = self.t0 if sel is None else self.t0[sel]
        x = values[t0[:, None] + np.arange(-self.lookback, 0), ch[:, None]]
        y = values[t0[:, None] + np.arange(self.horizon), ch[:, None]]
        return x, y


def build_window_index(table: TimeSeriesTable, split: range, lookback: int,
                       horizon: int) -> WindowIndex:
    """Pool the windows of every channel, channel-major, start ascending."""
    starts = np.array(window_starts(split, lookback, horizon), dtype=np.int64)
    num_channels = table.num_channels
    channel = np.repeat(np.arange(num_channels, dtype=np.int64), starts.size)
    t0 = np.tile(starts, num_channels)
    return WindowIndex(channel, t0, lookback, horizon)


@dataclass
class DataSplits:
    """Standardized values plus the window indexes of each split."""

    values: np.ndarray
    train: WindowIndex
    val: WindowIndex
    test: WindowIndex
    spec: SplitSpec
    scaler: Standardizer
    channel_names: list[str]

    def index_for(self, which: str) -> WindowIndex:
        if which not in ("train", "val", "test"):
            raise DataError(f"unknown split {which!r}")
        return getattr(self, which)


def prepare(table: TimeSeriesTable, lookback: int, horizon: int,
            fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> DataSplits:
    """Split, standardize on train, and index windows for all three splits."""
    spec = make_splits(table.num_timestamps, fractions)
    scaled, scaler = standardize(table, spec)
    return DataSplits(
        values=scaled.values,
        train=build_window_index(scaled, spec.train, lookback, horizon),
        val=build_window_index(scaled, spec.val, lookback, horizon),
        test=build_window_index(scaled, spec.test, lookback, horizon),
        spec=spec,
        scaler=scaler,
        channel_names=list(table.channel_names),
    )
