"""Forecasting models over single-channel windows.

Every model maps a lookback vector of length L to a horizon vector of length
T and accepts either one window (L,) or a batch (B, L). Channels never mix:
multichannel forecasting applies the same weights to each channel's windows
independently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn, qsim

MODEL_TYPES = ("qultsf", "linear", "nlinear", "dlinear")

DEFAULT_NUM_QUBITS = 10
DEFAULT_NUM_LAYERS = 3
DEFAULT_KERNEL = 25


def _as_batch(x: np.ndarray, length: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
        was_vector = True
    elif x.ndim == 2:
        was_vector = False
    else:
        raise ValueError(f"{what} must be a vector or batch of vectors, got shape {x.shape}")
    if x.shape[1] != length:
        raise ValueError(f"{what} has length {x.shape[1]}, expected {length}")
    return x, was_vector


@dataclass
class ForwardTrace:
    """Intermediate tensors of one hybrid forward pass, kept for backward."""

    y1: np.ndarray          # raw embedding inputs; arity matches the call
    y2: np.ndarray          # per-qubit <Z>; arity matches the call
    prediction: np.ndarray  # arity matches the call
    unit: np.ndarray        # normalized embedding amplitudes, real (B, 2^N)
    norms: np.ndarray       # embedding input norms, (B,)
    fallback: np.ndarray    # rows embedded as |0...0>, (B,) bool
    amps: np.ndarray        # final circuit amplitudes, complex (B, 2^N)
    was_vector: bool


class QuLTSFModel:
    """Linear map into an amplitude-embedded register, a layered entangling
    circuit read out qubit-wise in Pauli-Z, and a linear map to the horizon."""

    model_type = "qultsf"

    def __init__(self, lookback: int, horizon: int, num_qubits: int = DEFAULT_NUM_QUBITS,
                 num_layers: int = DEFAULT_NUM_LAYERS, rng: np.random.Generator | None = None):
        if num_qubits < 1 or num_layers < 1:
            raise ValueError(f"need num_qubits >= 1 and num_layers >= 1, got "
                             f"({num_qubits}, {num_layers})")
        self.lookback = lookback
        self.horizon = horizon
        self.num_qubits = num_qubits
        self.num_layers = num_layers
        dim = 1 << num_qubits
        self.input_layer = nn.LinearLayer(dim, lookback, rng, name="input")
        if rng is None:
            angles = np.zeros((num_layers, num_qubits, 3))
        else:
            angles = rng.uniform(0.0, 2.0 * np.pi, size=(num_layers, num_qubits, 3))
        self.circuit = qsim.CircuitParams(angles)
        self.grad_angles = np.zeros_like(self.circuit.angles)
        self.output_layer = nn.LinearLayer(horizon, num_qubits, rng, name="output")

    def forward_trace(self, x: np.ndarray) -> ForwardTrace:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        y1 = self.input_layer.forward(x2)
        unit, norms, fallback = qsim.embed_unit_batch(y1)
        amps = qsim.ansatz_amps(unit.astype(np.complex128), self.num_qubits,
                                self.circuit.angles)
        y2 = qsim.z_expectations_amps(amps, self.num_qubits)
        prediction = self.output_layer.forward(y2)
        if was_vector:
            y1, y2, prediction = y1[0], y2[0], prediction[0]
        return ForwardTrace(y1, y2, prediction, unit, norms, fallback, amps, was_vector)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_trace(x).prediction

    def backward(self, trace: ForwardTrace, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        u2, _ = _as_batch(upstream, self.horizon, "upstream gradient")
        y2, _ = _as_batch(trace.y2, self.num_qubits, "traced expectations")
        d_y2 = self.output_layer.backward(y2, u2)
        d_angles, d_unit = qsim.ansatz_vjp(trace.amps, self.num_qubits,
                                           self.circuit.angles, d_y2)
        self.grad_angles += d_angles
        d_y1 = qsim.embed_backward(d_unit, trace.unit, trace.norms, trace.fallback)
        dx = self.input_layer.backward(x2, d_y1)
        return dx[0] if was_vector else dx

    def parameters(self) -> list[nn.Parameter]:
        return (
            self.input_layer.parameters()
            + [nn.Parameter("circuit.angles", self.circuit.angles, self.grad_angles)]
            + self.output_layer.parameters()
        )

    def zero_grads(self) -> None:
        self.input_layer.zero_grads()
        self.grad_angles[:] = 0.0
        self.output_layer.zero_grads()

    @property
    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def describe(self) -> dict:
        return {
            "model": self.model_type,
            "lookback": self.lookback,
            "horizon": self.horizon,
            "num_qubits": self.num_qubits,
            "num_layers": self.num_layers,
            "circuit_param_count": self.circuit.num_params,
            "param_count": self.param_count,
        }


@dataclass
class SimpleTrace:
    prediction: np.ndarray


class LinearModel:
    """One affine map from lookback to horizon."""

    model_type = "linear"

    def __init__(self, lookback: int, horizon: int, rng: np.random.Generator | None = None):
        self.lookback = lookback
        self.horizon = horizon
        self.layer = nn.LinearLayer(horizon, lookback, rng, name="linear")

    def forward_trace(self, x: np.ndarray) -> SimpleTrace:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        pred = self.layer.forward(x2)
        return SimpleTrace(pred[0] if was_vector else pred)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_trace(x).prediction

    def backward(self, trace: SimpleTrace, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        u2, _ = _as_batch(upstream, self.horizon, "upstream gradient")
        dx = self.layer.backward(x2, u2)
        return dx[0] if was_vector else dx

    def parameters(self) -> list[nn.Parameter]:
        return self.layer.parameters()

    def zero_grads(self) -> None:
        self.layer.zero_grads()

    @property
    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def describe(self) -> dict:
        return {
            "model": self.model_type,
            "lookback": self.lookback,
            "horizon": self.horizon,
            "param_count": self.param_count,
        }


class NLinearModel:
    """Affine map on the window with its last value subtracted, added back
    to the output; exactly equivariant under constant shifts."""

    model_type = "nlinear"

    def __init__(self, lookback: int, horizon: int, rng: np.random.Generator | None = None):
        self.lookback = lookback
        self.horizon = horizon
        self.layer = nn.LinearLayer(horizon, lookback, rng, name="nlinear")

    def forward_trace(self, x: np.ndarray) -> SimpleTrace:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        last = x2[:, -1:]
        pred = self.layer.forward(x2 - last) + last
        return SimpleTrace(pred[0] if was_vector else pred)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_trace(x).prediction

    def backward(self, trace: SimpleTrace, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        u2, _ = _as_batch(upstream, self.horizon, "upstream gradient")
        last = x2[:, -1:]
        dx = self.layer.backward(x2 - last, u2)
        # the shift contributes through every x_last occurrence:
        # d/dx_last (W (x - x_last 1) + b + x_last 1) = 1 - row sums of W
        dx = dx.copy()
        dx[:, -1] += u2.sum(axis=1) - u2 @ self.layer.weights.sum(axis=1)
        return dx[0] if was_vector else dx

    def parameters(self) -> list[nn.Parameter]:
        return self.layer.parameters()

    def zero_grads(self) -> None:
        self.layer.zero_grads()

    @property
    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def describe(self) -> dict:
        return {
            "model": self.model_type,
            "lookback": self.lookback,
            "horizon": self.horizon,
            "param_count": self.param_count,
        }


# --- trend/seasonal decomposition -------------------------------------------

def _check_kernel(kernel: int, length: int) -> None:
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"kernel must be a positive odd integer, got {kernel}")
    if kernel > 2 * length - 1:
        raise ValueError(f"kernel {kernel} too large for series of length {length}")


def moving_average(x: np.ndarray, kernel: int) -> np.ndarray:
    """Centered moving average over the last axis with edge replication."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ValueError("cannot decompose an empty series")
    _check_kernel(kernel, x.shape[-1])
    pad = (kernel - 1) // 2
    padded = np.concatenate(
        [np.repeat(x[..., :1], pad, axis=-1), x, np.repeat(x[..., -1:], pad, axis=-1)],
        axis=-1,
    )
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel, axis=-1)
    return windows.mean(axis=-1)


def moving_average_adjoint(grad: np.ndarray, kernel: int) -> np.ndarray:
    """Transpose of `moving_average` as a linear map, for backpropagation."""
    grad = np.asarray(grad, dtype=np.float64)
    length = grad.shape[-1]
    _check_kernel(kernel, length)
    pad = (kernel - 1) // 2
    # every padded position j accumulates the windows that covered it
    padded_len = length + kernel - 1
    csum = np.cumsum(grad, axis=-1)
    j = np.arange(padded_len)
    hi = np.minimum(length - 1, j)
    lo = np.maximum(0, j - kernel + 1)
    upper = csum[..., hi]
    lower = np.where(lo > 0, csum[..., np.maximum(lo - 1, 0)], 0.0)
    g_padded = (upper - lower) / kernel
    dx = g_padded[..., pad:pad + length].copy()
    if pad:
        dx[..., 0] += g_padded[..., :pad].sum(axis=-1)
        dx[..., -1] += g_padded[..., pad + length:].sum(axis=-1)
    return dx


def decompose(x: np.ndarray, kernel: int = DEFAULT_KERNEL) -> tuple[np.ndarray, np.ndarray]:
    """Split a series into (trend, seasonal) with trend + seasonal == x exactly."""
    trend = moving_average(x, kernel)
    seasonal = np.asarray(x, dtype=np.float64) - trend
    return trend, seasonal


@dataclass
class DLinearTrace:
    prediction: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray


class DLinearModel:
    """Separate affine maps on the trend and seasonal parts, summed."""

    model_type = "dlinear"

    def __init__(self, lookback: int, horizon: int, kernel: int = DEFAULT_KERNEL,
                 rng: np.random.Generator | None = None):
        _check_kernel(kernel, lookback)
        self.lookback = lookback
        self.horizon = horizon
        self.kernel = kernel
        self.trend_layer = nn.LinearLayer(horizon, lookback, rng, name="trend")
        self.seasonal_layer = nn.LinearLayer(horizon, lookback, rng, name="seasonal")

    def forward_trace(self, x: np.ndarray) -> DLinearTrace:
        x2, was_vector = _as_batch(x, self.lookback, "lookback window")
        trend, seasonal = decompose(x2, self.kernel)
        pred = self.trend_layer.forward(trend) + self.seasonal_layer.forward(seasonal)
        return DLinearTrace(pred[0] if was_vector else pred, trend, seasonal)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_trace(x).prediction

    def backward(self, trace: DLinearTrace, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        _, was_vector = _as_batch(x, self.lookback, "lookback window")
        u2, _ = _as_batch(upstream, self.horizon, "upstream gradient")
        d_trend = self.trend_layer.backward(trace.trend, u2)
        d_seasonal = self.seasonal_layer.backward(trace.seasonal, u2)
        # x -> trend is linear (call it A); seasonal = x - trend, so
        # dx = A^T d_trend + (I - A^T) d_seasonal
        dx = d_seasonal + moving_average_adjoint(d_trend - d_seasonal, self.kernel)
        return dx[0] if was_vector else dx

    def parameters(self) -> list[nn.Parameter]:
        return self.trend_layer.parameters() + self.seasonal_layer.parameters()

    def zero_grads(self) -> None:
        self.trend_layer.zero_grads()
        self.seasonal_layer.zero_grads()

    @property
    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def describe(self) -> dict:
        return {
            "model": self.model_type,
            "lookback": self.lookback,
            "horizon": self.horizon,
            "kernel": self.kernel,
            "param_count": self.param_count,
        }


def build_model(model_type: str, lookback: int, horizon: int, *,
                num_qubits: int = DEFAULT_NUM_QUBITS, num_layers: int = DEFAULT_NUM_LAYERS,
                kernel: int = DEFAULT_KERNEL, rng: np.random.Generator | None = None):
    if lookback < 1 or horizon < 1:
        raise ValueError(f"lookback and horizon must be positive, got ({lookback}, {horizon})")
    if model_type == "qultsf":
        return QuLTSFModel(lookback, horizon, num_qubits, num_layers, rng)
    if model_type == "linear":
        return LinearModel(lookback, horizon, rng)
    if model_type == "nlinear":
        return NLinearModel(lookback, horizon, rng)
    if model_type == "dlinear":
        return DLinearModel(lookback, horizon, kernel, rng)
    raise ValueError(f"unknown model type {model_type!r}, expected one of {MODEL_TYPES}")
