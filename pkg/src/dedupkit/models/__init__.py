"""Classifiers: boosted trees and a small feedforward network."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .common import bce, expit
from .gbdt import GbdtConfig, GbdtModel, RegressionTree, gbdt_predict, gbdt_train
from .io import load_model, save_model
from .nn import (
    AdamState,
    NeuralNetConfig,
    NeuralNetModel,
    adam_step,
    backprop_gradients,
    init_model,
    nn_forward,
    nn_train,
)


def train_model(config, X, y, schema_digest: str | None = None):
    """Train whichever model family ``config`` describes."""
    if isinstance(config, GbdtConfig):
        return gbdt_train(X, y, config, schema_digest)
    if isinstance(config, NeuralNetConfig):
        return nn_train(X, y, config, schema_digest)
    raise TypeError(f"unsupported model config {type(config).__name__}")


def predict_proba(model, X, schema_digest: str | None = None) -> np.ndarray:
    return model.predict_proba(X, schema_digest)


def config_from_dict(kind: str, d: dict | None = None):
    d = dict(d or {})
    families = {"gbdt": GbdtConfig, "nn": NeuralNetConfig}
    if kind not in families:
        raise ConfigError(f"unknown model kind {kind!r}")
    try:
        return families[kind](**d)
    except TypeError as exc:
        raise ConfigError(f"bad {kind} config: {exc}") from exc


__all__ = [
    "AdamState",
    "GbdtConfig",
    "GbdtModel",
    "NeuralNetConfig",
    "NeuralNetModel",
    "RegressionTree",
    "adam_step",
    "backprop_gradients",
    "bce",
    "config_from_dict",
    "expit",
    "gbdt_predict",
    "gbdt_train",
    "init_model",
    "load_model",
    "nn_forward",
    "nn_train",
    "predict_proba",
    "save_model",
    "train_model",
]
