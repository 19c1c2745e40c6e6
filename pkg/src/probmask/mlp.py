"""Fully connected sigmoid network trained by plain mini-batch SGD.

Weights are stored ``(out, in)`` and inputs are batched row-wise, so a layer
computes ``sigmoid(a @ W.T + b)``. The output layer bias is held at zero and
never updated.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

MODEL_MAGIC = b"PBM1"
MODEL_VERSION = 1
CLAMP = 1e-12
LOSSES = ("cross_entropy", "mean_squared_error")
ACTIVATIONS = {"sigmoid": expit}


class ModelFormatError(ValueError):
    pass


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    bias_trainable: bool = True
    activation: str = "sigmoid"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weight.ndim != 2 or self.bias.shape[0] != self.weight.shape[0]:
            raise ValueError(f"bias length {self.bias.shape} does not match weight {self.weight.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    def __eq__(self, other):
        if not isinstance(other, Layer):
            return NotImplemented
        return (self.bias_trainable == other.bias_trainable
                and self.activation == other.activation
                and np.array_equal(self.weight, other.weight)
                and np.array_equal(self.bias, other.bias))


@dataclass
class MlpModel:
    layers: list[Layer]
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("model needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError("layer dimensions do not chain")
        if self.layers[-1].bias_trainable or np.any(self.layers[-1].bias != 0):
            raise ValueError("output layer bias must be zero and frozen")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.weight.shape[0] for layer in self.layers]

    def num_parameters(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 600
    learning_rate: float = 0.05
    batch_size: int = 100
    loss: str = "cross_entropy"
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")


def init_model(layer_dims, seed: int = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases, frozen zero output bias."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ValueError(f"invalid layer dims {layer_dims!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        last = i == len(dims) - 2
        layers.append(Layer(weight, np.zeros(fan_out), bias_trainable=not last))
    return MlpModel(layers, seed=seed)


def _as_batch(model: MlpModel, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.input_dim:
        raise ValueError(f"expected input dim {model.input_dim}, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    return x, single


def _activations(model: MlpModel, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for layer in model.layers:
        acts.append(ACTIVATIONS[layer.activation](acts[-1] @ layer.weight.T + layer.bias))
    return acts


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output for one input vector or a ``(batch, input_dim)`` array."""
    x, single = _as_batch(model, x)
    y = _activations(model, x)[-1]
    return y[0] if single else y


def predict(model: MlpModel, x, batch_size: int = 4096) -> np.ndarray:
    """Batched ``forward`` over many rows, bounded memory."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], model.output_dim))
    for start in range(0, x.shape[0], batch_size):
        out[start:start + batch_size] = forward(model, x[start:start + batch_size])
    return out


def _loss_terms(y: np.ndarray, t: np.ndarray, loss: str) -> tuple[float, np.ndarray]:
    """Batch-mean loss and its gradient w.r.t. the output pre-activation."""
    n = y.shape[0]
    if loss == "cross_entropy":
        yc = np.clip(y, CLAMP, 1 - CLAMP)
        value = -np.sum(t * np.log(yc) + (1 - t) * np.log(1 - yc)) / n
        # d/dz of the clamped loss: (y - t) inside the clamp range, 0 outside
        inside = (y > CLAMP) & (y < 1 - CLAMP)
        delta = (y - t) * inside / n
    elif loss == "mean_squared_error":
        err = y - t
        value = np.sum(err ** 2) / n
        delta = 2 * err * y * (1 - y) / n
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return float(value), delta


def loss_and_gradient(model: MlpModel, batch, loss: str = "cross_entropy"):
    """Mean-over-batch loss and per-layer ``(dW, db)`` gradients.

    Per example the loss sums over output units. Frozen biases get a zero
    gradient.
    """
    inputs, targets = batch
    x, _ = _as_batch(model, inputs)
    t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if t.shape != (x.shape[0], model.output_dim):
        raise ValueError(f"targets shape {t.shape} does not match output {(x.shape[0], model.output_dim)}")
    acts = _activations(model, x)
    value, delta = _loss_terms(acts[-1], t, loss)
    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        dw = delta.T @ acts[i]
        db = delta.sum(axis=0) if layer.bias_trainable else np.zeros_like(layer.bias)
        grads[i] = (dw, db)
        if i:
            a = acts[i]
            delta = (delta @ layer.weight) * a * (1 - a)
    return value, grads


def train_sgd(model: MlpModel, data, cfg: TrainConfig = None, progress=None):
    """Mini-batch SGD without momentum, decay or dropout.

    Returns a new model and the per-epoch training loss (example-weighted
    mean of the batch losses seen during that epoch). ``progress`` is called
    as ``progress(epoch, loss)`` after each epoch when given.
    """
    cfg = cfg or TrainConfig()
    inputs, targets = data
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("no training data")
    if targets.shape[0] != n:
        raise ValueError("inputs and targets differ in length")
    model = copy.deepcopy(model)
    rng = np.random.default_rng(cfg.seed)
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, grads = loss_and_gradient(model, (inputs[idx], targets[idx]), cfg.loss)
            total += value * len(idx)
            if cfg.learning_rate == 0:
                continue
            for layer, (dw, db) in zip(model.layers, grads):
                layer.weight -= cfg.learning_rate * dw
                if layer.bias_trainable:
                    layer.bias -= cfg.learning_rate * db
        trace.append(total / n)
        if progress is not None:
            progress(epoch, trace[-1])
    return model, np.array(trace)


def save_model(model: MlpModel) -> bytes:
    parts = [MODEL_MAGIC, struct.pack("<II", MODEL_VERSION, len(model.layers))]
    for layer in model.layers:
        rows, cols = layer.weight.shape
        parts.append(struct.pack("<IIB", rows, cols, int(layer.bias_trainable)))
        parts.append(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def load_model(blob: bytes) -> MlpModel:
    blob = bytes(blob)
    if len(blob) < 12:
        raise ModelFormatError("truncated model header")
    if blob[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {blob[:4]!r}")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    pos = 12
    layers = []
    for _ in range(count):
        if pos + 9 > len(blob):
            raise ModelFormatError("truncated layer header")
        rows, cols, trainable = struct.unpack_from("<IIB", blob, pos)
        pos += 9
        need = 8 * (rows * cols + rows)
        if pos + need > len(blob):
            raise ModelFormatError("truncated layer payload")
        weight = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=pos).reshape(rows, cols)
        pos += 8 * rows * cols
        bias = np.frombuffer(blob, dtype="<f8", count=rows, offset=pos)
        pos += 8 * rows
        layers.append(Layer(weight.astype(np.float64), bias.astype(np.float64), bool(trainable)))
    if pos != len(blob):
        raise ModelFormatError(f"{len(blob) - pos} trailing bytes after last layer")
    return MlpModel(layers)
