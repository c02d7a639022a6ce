"""Shallow feedforward network: forward pass, losses, analytic gradients.

Networks have one hidden layer with leaky-ReLU activation and either a
sigmoid or a softmax output. Trainable parameters live in a single flat
float64 vector ("position" from the optimizers' point of view): layer-1
weights row-major, layer-1 biases, layer-2 weights row-major, layer-2
biases. All functions here are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .errors import DivergenceError

#: Cross-entropy probabilities are clamped to [PROB_EPS, 1 - PROB_EPS].
PROB_EPS = _kernel.PROB_EPS

_EMPTY_CLS = np.empty(0, dtype=np.int64)
_EMPTY_REG = np.empty((0, 0), dtype=np.float64)


class LossKind(enum.Enum):
    BINARY_CROSS_ENTROPY = "binary_cross_entropy"
    SPARSE_CATEGORICAL_CROSS_ENTROPY = "sparse_categorical_cross_entropy"
    MEAN_SQUARED_ERROR = "mean_squared_error"


_LOSS_CODE = {
    LossKind.BINARY_CROSS_ENTROPY: _kernel.LOSS_BINXE,
    LossKind.SPARSE_CATEGORICAL_CROSS_ENTROPY: _kernel.LOSS_SPARSE_CAT_XE,
    LossKind.MEAN_SQUARED_ERROR: _kernel.LOSS_MSE,
}


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a one-hidden-layer dense network."""

    input_dim: int
    hidden_dim: int
    output_dim: int
    output_activation: str  # "sigmoid" | "softmax"
    hidden_activation: str = "leaky_relu"
    leaky_relu_slope: float = 0.3
    use_biases: bool = True

    def __post_init__(self):
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ValueError("all layer dimensions must be >= 1")
        if self.hidden_activation != "leaky_relu":
            raise ValueError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation not in ("sigmoid", "softmax"):
            raise ValueError(f"unsupported output activation {self.output_activation!r}")

    @property
    def _out_code(self):
        return _kernel.OUT_SIGMOID if self.output_activation == "sigmoid" else _kernel.OUT_SOFTMAX


@dataclass(frozen=True)
class Batch:
    """A mini-batch: inputs (n, input_dim) and targets.

    Classification targets are an int64 class-index vector; regression
    targets are a float64 matrix (n, output_dim).
    """

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[0] < 1:
            raise ValueError("batch inputs must be a non-empty 2-d matrix")
        if not np.isfinite(inputs).all():
            raise ValueError("batch inputs contain non-finite values")
        targets = np.asarray(self.targets)
        if np.issubdtype(targets.dtype, np.integer):
            targets = np.ascontiguousarray(targets, dtype=np.int64)
            if targets.ndim != 1 or targets.shape[0] != inputs.shape[0]:
                raise ValueError("class-index targets must be a vector matching the batch size")
        else:
            targets = np.ascontiguousarray(targets, dtype=np.float64)
            if targets.ndim != 2 or targets.shape[0] != inputs.shape[0]:
                raise ValueError("regression targets must be a matrix matching the batch size")
            if not np.isfinite(targets).all():
                raise ValueError("batch targets contain non-finite values")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def size(self):
        return self.inputs.shape[0]


def param_count(spec: NetworkSpec) -> int:
    """Number of trainable parameters for ``spec``."""
    if spec.use_biases:
        return (spec.input_dim + 1) * spec.hidden_dim + (spec.hidden_dim + 1) * spec.output_dim
    return spec.input_dim * spec.hidden_dim + spec.hidden_dim * spec.output_dim


def glorot_init(spec: NetworkSpec, seed) -> np.ndarray:
    """Glorot-uniform weights (biases zero), deterministic per seed.

    ``seed`` may be an int or a ``numpy.random.Generator``. Weights of each
    layer are drawn uniformly from +/- sqrt(6 / (fan_in + fan_out)), layer 1
    first.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    parts = []
    for fan_in, fan_out in ((spec.input_dim, spec.hidden_dim), (spec.hidden_dim, spec.output_dim)):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        parts.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        if spec.use_biases:
            parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def _check_params(spec, params):
    params = np.ascontiguousarray(params, dtype=np.float64)
    if params.shape != (param_count(spec),):
        raise ValueError(f"parameter vector has length {params.shape}, expected {param_count(spec)}")
    return params


def forward(spec: NetworkSpec, params: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Output-layer activations for a batch of inputs."""
    params = _check_params(spec, params)
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
        raise ValueError(f"inputs must have width {spec.input_dim}")
    if not np.isfinite(inputs).all():
        raise ValueError("inputs contain non-finite values")
    return _kernel.forward(
        params, spec.input_dim, spec.hidden_dim, spec.output_dim,
        spec.leaky_relu_slope, spec.use_biases, spec._out_code, inputs,
    )


def validate_loss_kind(spec: NetworkSpec, kind: LossKind) -> None:
    if kind is LossKind.BINARY_CROSS_ENTROPY:
        if spec.output_dim != 1 or spec.output_activation != "sigmoid":
            raise ValueError("binary cross-entropy requires a single sigmoid output")
    elif kind is LossKind.SPARSE_CATEGORICAL_CROSS_ENTROPY:
        if spec.output_activation != "softmax":
            raise ValueError("sparse categorical cross-entropy requires a softmax output")
    elif kind is LossKind.MEAN_SQUARED_ERROR:
        if spec.output_activation != "sigmoid":
            raise ValueError("mean squared error is for regression (sigmoid output)")


def loss(kind: LossKind, predictions: np.ndarray, targets) -> float:
    """Mean batch loss of predictions (network outputs) against targets.

    Cross-entropy kinds clamp probabilities to [PROB_EPS, 1 - PROB_EPS]
    before taking logs.
    """
    p = np.asarray(predictions, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("predictions must be 2-d")
    n = p.shape[0]
    if kind is LossKind.MEAN_SQUARED_ERROR:
        t = np.asarray(targets, dtype=np.float64)
        if t.shape != p.shape:
            raise ValueError("MSE targets must match prediction shape")
        return float(np.mean((p - t) ** 2))
    t = np.asarray(targets)
    if t.ndim != 1 or t.shape[0] != n:
        raise ValueError("classification targets must be a class-index vector")
    t = t.astype(np.int64)
    if kind is LossKind.BINARY_CROSS_ENTROPY:
        if p.shape[1] != 1:
            raise ValueError("binary cross-entropy expects one output column")
        q = np.clip(p[:, 0], PROB_EPS, 1.0 - PROB_EPS)
        y = t.astype(np.float64)
        return float(-np.mean(y * np.log(q) + (1.0 - y) * np.log(1.0 - q)))
    if (t < 0).any() or (t >= p.shape[1]).any():
        raise ValueError("class index out of range")
    q = np.clip(p[np.arange(n), t], PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(np.log(q)))


def accuracy(predictions: np.ndarray, targets) -> float:
    """Fraction of correct class predictions.

    Multi-column predictions are argmax-decoded; a single sigmoid column is
    thresholded at 0.5.
    """
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets).astype(np.int64)
    if p.shape[1] == 1:
        decided = (p[:, 0] >= 0.5).astype(np.int64)
    else:
        decided = p.argmax(axis=1)
    return float(np.mean(decided == t))


def _kernel_targets(kind, batch):
    if kind is LossKind.MEAN_SQUARED_ERROR:
        return _EMPTY_CLS, batch.targets
    return batch.targets, _EMPTY_REG


def batch_loss(spec: NetworkSpec, params: np.ndarray, batch: Batch, kind: LossKind) -> float:
    """Mean loss of the network at ``params`` on ``batch``."""
    params = _check_params(spec, params)
    t_cls, t_reg = _kernel_targets(kind, batch)
    value = _kernel.loss_value(
        params, spec.input_dim, spec.hidden_dim, spec.output_dim,
        spec.leaky_relu_slope, spec.use_biases, spec._out_code,
        _LOSS_CODE[kind], batch.inputs, t_cls, t_reg,
    )
    if not np.isfinite(value):
        raise DivergenceError("non-finite loss")
    return value


def loss_and_gradient(spec: NetworkSpec, params: np.ndarray, batch: Batch, kind: LossKind):
    """Mean batch loss and its analytic gradient (backprop), as a pair."""
    params = _check_params(spec, params)
    t_cls, t_reg = _kernel_targets(kind, batch)
    value, grad = _kernel.loss_and_grad(
        params, spec.input_dim, spec.hidden_dim, spec.output_dim,
        spec.leaky_relu_slope, spec.use_biases, spec._out_code,
        _LOSS_CODE[kind], batch.inputs, t_cls, t_reg,
    )
    if not np.isfinite(value) or not np.isfinite(grad).all():
        raise DivergenceError("non-finite value in gradient computation")
    return value, grad


def gradient(spec: NetworkSpec, params: np.ndarray, batch: Batch, kind: LossKind) -> np.ndarray:
    """Analytic gradient of the mean batch loss, in parameter-vector layout."""
    return loss_and_gradient(spec, params, batch, kind)[1]


def finite_diff_gradient(spec: NetworkSpec, params: np.ndarray, batch: Batch,
                         kind: LossKind, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient approximation, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    params = _check_params(spec, params).copy()
    grad = np.empty_like(params)
    for i in range(params.shape[0]):
        orig = params[i]
        params[i] = orig + h
        up = batch_loss(spec, params, batch, kind)
        params[i] = orig - h
        down = batch_loss(spec, params, batch, kind)
        params[i] = orig
        grad[i] = (up - down) / (2.0 * h)
    return grad
