"""Feedforward binary classifier with manual backpropagation and Adam.

All parameters of a network, including batch-norm running statistics, live in
one flat float64 vector (:class:`ParamVector`).  Layers read and write their
weights through reshaped views of that vector, so the federation code can treat
a model as plain numeric state and average it element-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import expit

from .errors import (
    ConfigurationError,
    DegenerateBatchError,
    InternalConsistencyError,
    ShapeError,
)

LayerKind = Literal["dense", "batchnorm", "relu", "dropout", "sigmoid"]
Mode = Literal["train", "eval"]

BN_MOMENTUM = 0.9
BN_EPSILON = 1e-5
PRED_CLIP = 1e-7

_ROLES = {
    "dense": ("weight", "bias"),
    "batchnorm": ("bn_gamma", "bn_beta", "bn_running_mean", "bn_running_var"),
}
TRAINABLE_ROLES = frozenset({"weight", "bias", "bn_gamma", "bn_beta"})


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_dim: int
    out_dim: int
    dropout_rate: float = 0.0
    epsilon: float = BN_EPSILON


def dense(in_dim: int, out_dim: int) -> LayerSpec:
    return LayerSpec("dense", in_dim, out_dim)


def canonical_stack(
    input_dim: int, hidden: Sequence[int] = (64, 64), dropout_rate: float = 0.3
) -> list[LayerSpec]:
    """dense -> batchnorm -> relu -> dropout per hidden layer, then dense(->1) and sigmoid."""
    layers: list[LayerSpec] = []
    width = input_dim
    for h in hidden:
        layers += [
            LayerSpec("dense", width, h),
            LayerSpec("batchnorm", h, h),
            LayerSpec("relu", h, h),
            LayerSpec("dropout", h, h, dropout_rate=dropout_rate),
        ]
        width = h
    layers += [LayerSpec("dense", width, 1), LayerSpec("sigmoid", 1, 1)]
    return layers


def validate_spec(spec: Sequence[LayerSpec]) -> None:
    if not spec:
        raise ConfigurationError("layer stack is empty")
    for i, layer in enumerate(spec):
        if layer.kind not in ("dense", "batchnorm", "relu", "dropout", "sigmoid"):
            raise ConfigurationError(f"layer {i}: unknown kind {layer.kind!r}")
        if layer.in_dim < 1 or layer.out_dim < 1:
            raise ConfigurationError(f"layer {i}: dimensions must be positive")
        if layer.kind != "dense" and layer.in_dim != layer.out_dim:
            raise ConfigurationError(f"layer {i}: {layer.kind} must preserve width")
        if layer.kind == "dropout" and not 0.0 <= layer.dropout_rate < 1.0:
            raise ConfigurationError(f"layer {i}: dropout_rate must lie in [0, 1)")
        if layer.kind == "batchnorm" and not layer.epsilon > 0:
            raise ConfigurationError(f"layer {i}: epsilon must be positive")
        if i and spec[i - 1].out_dim != layer.in_dim:
            raise ConfigurationError(
                f"layer {i}: in_dim {layer.in_dim} != previous out_dim {spec[i - 1].out_dim}"
            )
    if spec[-1].kind != "sigmoid" or spec[-1].out_dim != 1:
        raise ConfigurationError("stack must end in a width-1 sigmoid layer")


# --------------------------------------------------------------------------
# Flat parameter storage


@dataclass(frozen=True)
class ParamSlot:
    layer: int
    role: str
    shape: tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return math.prod(self.shape)


def build_layout(spec: Sequence[LayerSpec]) -> tuple[ParamSlot, ...]:
    slots = []
    offset = 0
    for i, layer in enumerate(spec):
        if layer.kind == "dense":
            shapes = [(layer.in_dim, layer.out_dim), (layer.out_dim,)]
        elif layer.kind == "batchnorm":
            shapes = [(layer.out_dim,)] * 4
        else:
            continue
        for role, shape in zip(_ROLES[layer.kind], shapes):
            slot = ParamSlot(i, role, shape, offset)
            slots.append(slot)
            offset += slot.size
    return tuple(slots)


@dataclass
class ParamVector:
    """Flat parameter vector plus the layout that gives each segment meaning."""

    values: np.ndarray
    layout: tuple[ParamSlot, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = sum(s.size for s in self.layout)
        if self.values.shape != (expected,):
            raise ShapeError(f"values length {self.values.size} != layout size {expected}")
        self._index = {(s.layer, s.role): s for s in self.layout}

    def __len__(self) -> int:
        return self.values.size

    def view(self, layer: int, role: str) -> np.ndarray:
        slot = self._index[layer, role]
        return self.values[slot.offset : slot.offset + slot.size].reshape(slot.shape)

    def copy(self) -> ParamVector:
        return ParamVector(self.values.copy(), self.layout)

    def zeros_like(self) -> ParamVector:
        return ParamVector(np.zeros_like(self.values), self.layout)

    def check_compatible(self, other: ParamVector) -> None:
        if self.layout is not other.layout and self.layout != other.layout:
            raise ShapeError("parameter layouts differ")

    def trainable_mask(self) -> np.ndarray:
        mask = np.zeros(self.values.size, dtype=bool)
        for slot in self.layout:
            if slot.role in TRAINABLE_ROLES:
                mask[slot.offset : slot.offset + slot.size] = True
        return mask


# --------------------------------------------------------------------------
# Model state


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, lr: float = 1e-3, **kwargs) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), lr=lr, **kwargs)


@dataclass
class Batch:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError("features must be a 2-D matrix")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ShapeError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.features.shape[0] < 1:
            raise ConfigurationError("batch has no rows")


@dataclass
class MlpModel:
    spec: tuple[LayerSpec, ...]
    params: ParamVector
    adam: AdamState
    rng: np.random.Generator
    loss_history: list[float] = field(default_factory=list)
    # bumped by every optimizer step; caches remember the version they saw
    version: int = 0
    _mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def input_dim(self) -> int:
        return self.spec[0].in_dim

    @property
    def trainable(self) -> np.ndarray:
        if self._mask is None:
            self._mask = self.params.trainable_mask()
        return self._mask


def init_model(spec: Sequence[LayerSpec], seed, lr: float = 1e-3) -> MlpModel:
    """Fresh model: He-normal dense weights, zero biases, identity batch-norm.

    ``seed`` may be an int or a sequence of ints (fed to ``numpy.random.default_rng``);
    the same generator then drives dropout masks and batch shuffling.
    """
    spec = tuple(spec)
    validate_spec(spec)
    rng = np.random.default_rng(seed)
    params = ParamVector(np.zeros(sum(s.size for s in build_layout(spec))), build_layout(spec))
    for i, layer in enumerate(spec):
        if layer.kind == "dense":
            std = np.sqrt(2.0 / layer.in_dim)
            params.view(i, "weight")[...] = rng.normal(0.0, std, (layer.in_dim, layer.out_dim))
        elif layer.kind == "batchnorm":
            params.view(i, "bn_gamma")[...] = 1.0
            params.view(i, "bn_running_var")[...] = 1.0
    return MlpModel(spec, params, AdamState.zeros(len(params), lr=lr), rng)


def model_from_params(
    spec: Sequence[LayerSpec], params: ParamVector, seed, lr: float = 1e-3
) -> MlpModel:
    """Model holding a copy of ``params`` with zeroed Adam state and its own RNG."""
    spec = tuple(spec)
    validate_spec(spec)
    layout = build_layout(spec)
    if params.layout != layout:
        raise ShapeError("parameter layout does not match layer stack")
    return MlpModel(
        spec,
        ParamVector(params.values.copy(), layout),
        AdamState.zeros(len(params), lr=lr),
        np.random.default_rng(seed),
    )


# --------------------------------------------------------------------------
# Forward / backward


@dataclass
class ForwardCache:
    mode: Mode
    version: int
    params: ParamVector
    entries: list
    output: np.ndarray


def forward(model: MlpModel, batch: Batch | np.ndarray, mode: Mode = "eval"):
    """Run the stack and return ``(predictions, cache)``.

    Train mode uses batch statistics (and updates the running ones in place) and
    draws inverted-dropout masks from the model's generator.  Eval mode is a pure
    function of the parameters and the input.
    """
    x = batch.features if isinstance(batch, Batch) else np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeError(f"expected input of width {model.input_dim}, got shape {x.shape}")
    if mode not in ("train", "eval"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    train = mode == "train"
    if train and x.shape[0] < 2:
        raise DegenerateBatchError("train-mode batch needs at least 2 rows for batch statistics")

    p = model.params
    entries: list = []
    for i, layer in enumerate(model.spec):
        if layer.kind == "dense":
            entries.append(x)
            x = x @ p.view(i, "weight") + p.view(i, "bias")
        elif layer.kind == "batchnorm":
            gamma, beta = p.view(i, "bn_gamma"), p.view(i, "bn_beta")
            rmean, rvar = p.view(i, "bn_running_mean"), p.view(i, "bn_running_var")
            if train:
                mu = x.mean(axis=0)
                var = x.var(axis=0)
                inv_std = 1.0 / np.sqrt(var + layer.epsilon)
                xhat = (x - mu) * inv_std
                rmean *= BN_MOMENTUM
                rmean += (1.0 - BN_MOMENTUM) * mu
                rvar *= BN_MOMENTUM
                rvar += (1.0 - BN_MOMENTUM) * var
                entries.append((xhat, inv_std))
            else:
                xhat = (x - rmean) / np.sqrt(rvar + layer.epsilon)
                entries.append(None)
            x = gamma * xhat + beta
        elif layer.kind == "relu":
            mask = x > 0
            entries.append(mask)
            x = x * mask
        elif layer.kind == "dropout":
            if train and layer.dropout_rate > 0:
                keep = 1.0 - layer.dropout_rate
                mask = (model.rng.random(x.shape) < keep) / keep
                entries.append(mask)
                x = x * mask
            else:
                entries.append(None)
        else:  # sigmoid
            entries.append(None)
            x = expit(x)
    out = x[:, 0]
    return out, ForwardCache(mode, model.version, p, entries, out)


def predict(model: MlpModel, features: np.ndarray) -> np.ndarray:
    return forward(model, features, "eval")[0]


def bce_loss(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with predictions clipped to [1e-7, 1 - 1e-7]."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ShapeError(f"{p.shape} predictions vs {y.shape} labels")
    p = np.clip(p, PRED_CLIP, 1.0 - PRED_CLIP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def backward(model: MlpModel, cache: ForwardCache, labels: np.ndarray) -> ParamVector:
    """Gradient of the mean BCE with respect to every parameter slot.

    The sigmoid and loss are differentiated together in logit space, giving
    ``(p - y) / N`` at the output.  Running-statistic slots get zeros.
    """
    if cache.mode != "train":
        raise InternalConsistencyError("backward needs a train-mode forward cache")
    if cache.params is not model.params or cache.version != model.version:
        raise InternalConsistencyError("cache was computed with different parameters")
    y = np.asarray(labels, dtype=np.float64)

    p = model.params
    if y.shape != cache.output.shape:
        raise ShapeError(f"{y.shape[0]} labels for {cache.output.shape[0]} predictions")
    grad = p.zeros_like()
    dx = ((cache.output - y) / y.shape[0])[:, None]
    # the final sigmoid is folded into dx above
    for i in range(len(model.spec) - 2, -1, -1):
        layer, entry = model.spec[i], cache.entries[i]
        if layer.kind == "dense":
            grad.view(i, "weight")[...] = entry.T @ dx
            grad.view(i, "bias")[...] = dx.sum(axis=0)
            dx = dx @ p.view(i, "weight").T
        elif layer.kind == "batchnorm":
            xhat, inv_std = entry
            grad.view(i, "bn_gamma")[...] = (dx * xhat).sum(axis=0)
            grad.view(i, "bn_beta")[...] = dx.sum(axis=0)
            dxhat = dx * p.view(i, "bn_gamma")
            m = dxhat.shape[0]
            dx = (inv_std / m) * (
                m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
        elif layer.kind in ("relu", "dropout"):
            if entry is not None:
                dx = dx * entry
    return grad



def adam_step(model: MlpModel, gradient: ParamVector) -> MlpModel:
    """One bias-corrected Adam update applied to trainable slots only (in place)."""
    model.params.check_compatible(gradient)
    st = model.adam
    g = np.where(model.trainable, gradient.values, 0.0)
    st.step_count += 1
    t = st.step_count
    st.m *= st.beta1
    st.m += (1.0 - st.beta1) * g
    st.v *= st.beta2
    st.v += (1.0 - st.beta2) * g * g
    m_hat = st.m / (1.0 - st.beta1**t)
    v_hat = st.v / (1.0 - st.beta2**t)
    model.params.values -= st.lr * m_hat / (np.sqrt(v_hat) + st.eps)
    model.version += 1
    return model


def train_step(model: MlpModel, batch: Batch) -> float:
    """forward(train) -> backward -> adam_step on one batch; returns the batch loss."""
    probs, cache = forward(model, batch, "train")
    loss = bce_loss(probs, batch.labels)
    adam_step(model, backward(model, cache, batch.labels))
    return loss


def batch_bounds(n_rows: int, batch_size: int) -> list[tuple[int, int]]:
    """Slice boundaries; a trailing single row is folded into the previous batch."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    bounds = [(s, min(s + batch_size, n_rows)) for s in range(0, n_rows, batch_size)]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] == 1:
        last = bounds.pop()
        bounds[-1] = (bounds[-1][0], last[1])
    return bounds


def train_epochs(model: MlpModel, data: Batch, epochs: int, batch_size: int = 32) -> MlpModel:
    if epochs < 1:
        raise ConfigurationError("epochs must be >= 1")
    n = data.features.shape[0]
    bounds = batch_bounds(n, batch_size)
    for _ in range(epochs):
        order = model.rng.permutation(n)
        losses = []
        for lo, hi in bounds:
            idx = order[lo:hi]
            losses.append(train_step(model, Batch(data.features[idx], data.labels[idx])))
        model.loss_history.append(float(np.mean(losses)))
    return model
