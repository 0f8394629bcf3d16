"""Minimal training kit: affine layers, MSE, Adam, checkpoint text format.

Gradients accumulate into per-parameter buffers until `zero_grads`; the
optimizer updates parameter arrays in place. Everything is float64.

Checkpoint format (version 1), plain text:

    qultsf-params 1
    meta <key> <value>            # zero or more
    param <name> <d0>x<d1>x...    # then one line of values per row,
    <row-major values, %.17g>     # scalars/vectors use a single line

%.17g round-trips float64 exactly, so save/load is bit-faithful.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = "qultsf-params"
CHECKPOINT_VERSION = 1


@dataclass
class Parameter:
    """A named trainable array with its gradient accumulator."""

    name: str
    value: np.ndarray
    grad: np.ndarray


def init_weight(out_dim: int, in_dim: int, rng: np.random.Generator) -> np.ndarray:
    bound = 1.0 / np.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim))


class LinearLayer:
    """y = W x + b with accumulating gradients.

    Weights start uniform in [-1/sqrt(in_dim), +1/sqrt(in_dim)], biases at
    zero; pass rng=None for all-zero weights.
    """

    def __init__(self, out_dim: int, in_dim: int, rng: np.random.Generator | None = None,
                 name: str = "linear"):
        if out_dim < 1 or in_dim < 1:
            raise ValueError(f"layer dims must be positive, got ({out_dim}, {in_dim})")
        self.name = name
        if rng is None:
            self.weights = np.zeros((out_dim, in_dim))
        else:
            self.weights = init_weight(out_dim, in_dim, rng)
        self.bias = np.zeros(out_dim)
        self.grad_weights = np.zeros_like(self.weights)
        self.grad_bias = np.zeros_like(self.bias)

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ValueError(
                f"{self.name}: input has size {x.shape[-1]}, layer expects {self.in_dim}"
            )
        return x @ self.weights.T + self.bias

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients, return the gradient w.r.t. x."""
        x = np.asarray(x, dtype=np.float64)
        upstream = np.asarray(upstream, dtype=np.float64)
        if x.shape[:-1] != upstream.shape[:-1]:
            raise ValueError(
                f"{self.name}: input batch {x.shape[:-1]} != upstream batch {upstream.shape[:-1]}"
            )
        if upstream.shape[-1] != self.out_dim:
            raise ValueError(
                f"{self.name}: upstream has size {upstream.shape[-1]}, layer emits {self.out_dim}"
            )
        x2 = x.reshape(-1, self.in_dim)
        u2 = upstream.reshape(-1, self.out_dim)
        self.grad_weights += u2.T @ x2
        self.grad_bias += u2.sum(axis=0)
        return upstream @ self.weights

    def parameters(self, prefix: str = "") -> list[Parameter]:
        base = f"{prefix}{self.name}"
        return [
            Parameter(f"{base}.weights", self.weights, self.grad_weights),
            Parameter(f"{base}.bias", self.bias, self.grad_bias),
        ]

    def zero_grads(self) -> None:
        self.grad_weights[:] = 0.0
        self.grad_bias[:] = 0.0


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient in the prediction."""
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ValueError(f"shape mismatch: prediction {prediction.shape}, target {target.shape}")
    if prediction.size == 0:
        raise ValueError("mse_loss over zero entries is undefined")
    diff = prediction - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


@dataclass
class AdamState:
    """Moment accumulators and step counter for one parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step_count: int = 0


class Adam:
    """Adam with bias-corrected moments; updates parameter arrays in place."""

    def __init__(self, params: list[Parameter], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        if learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        if not 0 <= beta1 < 1 or not 0 <= beta2 < 1:
            raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        self.params = list(params)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.state = AdamState(
            m=[np.zeros_like(p.value) for p in self.params],
            v=[np.zeros_like(p.value) for p in self.params],
        )
        # Scratch pair per parameter; contents are meaningless between steps.
        self._scratch = [(np.empty_like(p.value), np.empty_like(p.value))
                         for p in self.params]

    def step(self) -> None:
        self.state.step_count += 1
        t = self.state.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for p, m, v, (s, u) in zip(self.params, self.state.m, self.state.v, self._scratch):
            g = p.grad
            m *= self.beta1
            np.multiply(g, 1.0 - self.beta1, out=s)
            m += s
            v *= self.beta2
            np.multiply(g, 1.0 - self.beta2, out=s)
            s *= g
            v += s
            # p -= lr * (m / c1) / (sqrt(v / c2) + eps), without temporaries
            np.divide(v, c2, out=s)
            np.sqrt(s, out=s)
            s += self.epsilon
            np.divide(m, c1, out=u)
            u *= self.learning_rate
            u /= s
            p.value -= u

    def zero_grads(self) -> None:
        for p in self.params:
            p.grad[:] = 0.0


# --- checkpoint io -----------------------------------------------------------

def save_params(path, params: list[Parameter], meta: dict[str, str] | None = None) -> None:
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}"]
    for key, value in (meta or {}).items():
        if any(c.isspace() for c in key):
            raise ValueError(f"meta key may not contain whitespace: {key!r}")
        lines.append(f"meta {key} {value}")
    for p in params:
        shape = "x".join(str(d) for d in p.value.shape) or "scalar"
        lines.append(f"param {p.name} {shape}")
        rows = p.value.reshape(-1, p.value.shape[-1]) if p.value.ndim > 1 else [p.value.reshape(-1)]
        for row in rows:
            lines.append(" ".join(f"{x:.17g}" for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise ValueError(f"{path}: empty checkpoint")
    head = lines[0].split()
    if len(head) != 2 or head[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a recognized checkpoint (header {lines[0]!r})")
    if int(head[1]) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {head[1]}")
    arrays: dict[str, np.ndarray] = {}
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if line.startswith("meta "):
            _, key, value = line.split(" ", 2)
            meta[key] = value
            i += 1
            continue
        if not line.startswith("param "):
            raise ValueError(f"{path}: unexpected line {i + 1}: {line!r}")
        _, name, shape_s = line.split(" ")
        shape = () if shape_s == "scalar" else tuple(int(d) for d in shape_s.split("x"))
        num_rows = 1 if len(shape) < 2 else int(np.prod(shape[:-1]))
        values = []
        for r in range(num_rows):
            i_row = i + 1 + r
            if i_row >= len(lines):
                raise ValueError(f"{path}: truncated values for parameter {name!r}")
            values.extend(float(tok) for tok in lines[i_row].split())
        arr = np.array(values, dtype=np.float64)
        expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if arr.size != expected:
            raise ValueError(f"{path}: parameter {name!r} has {arr.size} values, shape {shape}")
        arrays[name] = arr.reshape(shape)
        i += 1 + num_rows
    return arrays, meta


def load_params_into(path, params: list[Parameter]) -> dict[str, str]:
    """Fill the given parameters from a checkpoint; names and shapes must match."""
    arrays, meta = load_params(path)
    for p in params:
        if p.name not in arrays:
            raise ValueError(f"{path}: checkpoint is missing parameter {p.name!r}")
        if arrays[p.name].shape != p.value.shape:
            raise ValueError(
                f"{path}: parameter {p.name!r} has shape {arrays[p.name].shape}, "
                f"model expects {p.value.shape}"
            )
        p.value[:] = arrays[p.name]
    extra = set(arrays) - {p.name for p in params}
    if extra:
        raise ValueError(f"{path}: checkpoint has unknown parameters {sorted(extra)}")
    return meta
