"""Fully connected ReLU network with a sigmoid output, trained by Adam on
mean binary cross-entropy."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, InputError, ShapeError
from .common import check_binary_targets, check_schema, expit, log_loss, prob_clip

ARCHITECTURE = (20, 30, 30, 1)


@dataclass(frozen=True)
class NeuralNetConfig:
    layer_sizes: tuple[int, ...] = ARCHITECTURE
    step_size: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        if self.layer_sizes != ARCHITECTURE:
            raise ConfigError(f"layer_sizes are fixed at {ARCHITECTURE}")
        if self.step_size <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("step_size must be > 0, batch_size >= 1, epochs >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise ConfigError("Adam betas must lie in [0, 1) and epsilon be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        return d

    @property
    def size(self) -> int:
        return self.epochs


@dataclass
class NeuralNetModel:
    """``weights[k]`` has shape ``(out, in)``; the last layer has one unit."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: NeuralNetConfig | None = None
    schema_digest: str | None = None
    train_loss: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias vector per weight matrix")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ShapeError(f"layer {k}: weight {W.shape} and bias {b.shape} disagree")
            if k and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"layer {k}: input width {W.shape[1]} does not match")
        if self.weights[-1].shape[0] != 1:
            raise ShapeError("output layer must have a single unit")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[1]

    def n_parameters(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def logits(self, X: np.ndarray) -> np.ndarray:
        h = _check_inputs(X, self.n_features)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W.T + b, 0.0)
        return (h @ self.weights[-1].T + self.biases[-1])[:, 0]

    def predict_proba(self, X: np.ndarray, schema_digest: str | None = None) -> np.ndarray:
        check_schema(self.schema_digest, schema_digest)
        return prob_clip(expit(self.logits(X)))


def _check_inputs(X, width: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != width:
        raise ShapeError(f"expected (n, {width}) inputs, got {X.shape}")
    if not np.isfinite(X).all():
        raise InputError("inputs must be finite")
    return X


def init_model(layer_sizes: Sequence[int], rng: np.random.Generator) -> NeuralNetModel:
    """He-normal weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NeuralNetModel(weights, biases)


def nn_forward(model: NeuralNetModel, features) -> float:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a single feature vector, got shape {x.shape}")
    return float(model.predict_proba(x[None, :])[0])


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss: float

    def flat(self) -> np.ndarray:
        return np.concatenate([g.ravel() for pair in zip(self.weights, self.biases) for g in pair])


def backprop_gradients(model: NeuralNetModel, X, y=None) -> Gradients:
    """Exact gradients of the mean BCE over a batch.

    ``X`` may also be a sequence of FeatureVector, in which case ``y`` is
    taken from their labels.
    """
    if y is None:
        X, y = _vectors_to_arrays(X)
    X = _check_inputs(X, model.n_features)
    y = np.asarray(y, dtype=np.float64)
    if len(X) == 0 or len(X) != len(y):
        raise ShapeError("batch must be non-empty with one label per row")

    acts = [X]
    h = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ W.T + b, 0.0)
        acts.append(h)
    z = (h @ model.weights[-1].T + model.biases[-1])[:, 0]

    n = len(X)
    delta = ((expit(z) - y) / n)[:, None]
    gw = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        gw[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k]) * (acts[k] > 0)
    return Gradients(gw, gb, log_loss(y, z))


def _vectors_to_arrays(vectors):
    X = np.array([v.values for v in vectors], dtype=np.float64)
    y = np.array([v.label for v in vectors], dtype=np.float64)
    return X, y


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
              step_size: float = 0.001, beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8) -> None:
    """In-place bias-corrected Adam update."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= step_size * (m / c1) / (np.sqrt(v / c2) + epsilon)


def nn_train(X, y, config: NeuralNetConfig = NeuralNetConfig(),
             schema_digest: str | None = None) -> NeuralNetModel:
    X = _check_inputs(X, config.layer_sizes[0])
    y = np.asarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise ShapeError("one label per row required")
    check_binary_targets(y)
    rng = np.random.default_rng(config.seed)
    model = init_model(config.layer_sizes, rng)
    model.config = config
    model.schema_digest = schema_digest
    params = [p for pair in zip(model.weights, model.biases) for p in pair]
    state = AdamState.zeros_like(params)
    for _ in range(config.epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), config.batch_size):
            idx = order[start:start + config.batch_size]
            g = backprop_gradients(model, X[idx], y[idx])
            grads = [a for pair in zip(g.weights, g.biases) for a in pair]
            adam_step(params, grads, state, config.step_size, config.beta1,
                      config.beta2, config.epsilon)
        model.train_loss.append(log_loss(y, model.logits(X)))
    return model
