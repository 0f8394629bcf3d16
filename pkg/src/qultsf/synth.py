"""Deterministic synthetic multichannel series, shaped like a year of
10-minute sensor exports: 52,696 timestamps x 21 channels by default.

Channels mix a handful of shared smooth latent factors (daily and slower
cycles, a drifting level) with autocorrelated noise, so the series are
genuinely forecastable but carry an irreducible noise floor, and the optimal
predictor is approximately low-rank across channels.
"""
from __future__ import annotations

import datetime

import numpy as np

from .data import TimeSeriesTable

REFERENCE_ROWS = 52696
REFERENCE_CHANNELS = 21
STEPS_PER_DAY = 144  # 10-minute cadence


def _ar1(rng: np.random.Generator, n: int, rho: float, scale: float) -> np.ndarray:
    noise = rng.normal(size=n) * scale
    out = np.empty(n)
    acc = 0.0
    root = np.sqrt(1.0 - rho * rho)
    for i in range(n):
        acc = rho * acc + root * noise[i]
        out[i] = acc
    return out


def synth_table(num_rows: int = REFERENCE_ROWS, num_channels: int = REFERENCE_CHANNELS,
                seed: int = 0, start: str = "2020-01-01 00:00:00") -> TimeSeriesTable:
    """Build the synthetic table; identical (rows, channels, seed) give
    identical values."""
    if num_rows < 1 or num_channels < 1:
        raise ValueError(f"need positive table dims, got ({num_rows}, {num_channels})")
    rng = np.random.default_rng(seed)
    t = np.arange(num_rows, dtype=np.float64)

    day = 2.0 * np.pi * t / STEPS_PER_DAY
    factors = np.stack(
        [
            np.sin(day + rng.uniform(0, 2 * np.pi)),
            np.cos(2.0 * day + rng.uniform(0, 2 * np.pi)),
            np.sin(day / 7.0 + rng.uniform(0, 2 * np.pi)),
            _ar1(rng, num_rows, rho=0.9995, scale=1.0),  # slow weather-like drift
        ],
        axis=1,
    )
    factors = (factors - factors.mean(axis=0)) / factors.std(axis=0)

    loadings = rng.uniform(-1.0, 1.0, size=(factors.shape[1], num_channels))
    signal = factors @ loadings
    signal /= signal.std(axis=0)

    # per-channel measurement noise, mildly autocorrelated; roughly half the
    # variance, so no model can push MSE toward zero
    noise = np.stack(
        [_ar1(rng, num_rows, rho=0.6, scale=1.0) for _ in range(num_channels)], axis=1
    )
    noise /= noise.std(axis=0)

    offsets = rng.uniform(-10.0, 30.0, size=num_channels)
    scales = rng.uniform(0.5, 3.0, size=num_channels)
    values = offsets + scales * (signal + 0.8 * noise)

    t0 = datetime.datetime.strptime(start, "%Y-%m-%d %H:%M:%S")
    step = datetime.timedelta(minutes=10)
    timestamps = [(t0 + i * step).strftime("%Y-%m-%d %H:%M:%S") for i in range(num_rows)]
    names = [f"var{i + 1:02d}" for i in range(num_channels)]
    return TimeSeriesTable(values, names, timestamps)


def write_csv(path, table: TimeSeriesTable, delimiter: str = ",") -> None:
    """Write a table in the ingestion format (timestamp column first)."""
    with open(path, "w") as fh:
        fh.write(delimiter.join(["date"] + table.channel_names) + "\n")
        stamps = table.timestamps or [str(i) for i in range(table.num_timestamps)]
        for stamp, row in zip(stamps, table.values):
            cells = [stamp] + [f"{v:.6f}" for v in row]
            fh.write(delimiter.join(cells) + "\n")


def synth_csv(path, num_rows: int = REFERENCE_ROWS, num_channels: int = REFERENCE_CHANNELS,
              seed: int = 0, delimiter: str = ",") -> TimeSeriesTable:
    table = synth_table(num_rows, num_channels, seed)
    write_csv(path, table, delimiter)
    return table
