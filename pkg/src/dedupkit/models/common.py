from __future__ import annotations

import numpy as np

from ..errors import SchemaMismatchError, TrainingError

# Keeps probabilities strictly inside (0, 1) after float rounding.
PROB_EPS = 1e-15


def expit(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def prob_clip(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def log_loss(y: np.ndarray, logits: np.ndarray) -> float:
    """Mean binary cross-entropy computed from logits."""
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def bce(p: float, y: float) -> float:
    """Binary cross-entropy of one probability against one label."""
    loss = 0.0
    if y:
        loss -= y * np.log(p)
    if y != 1:
        loss -= (1 - y) * np.log1p(-p)
    return float(loss)


def check_binary_targets(y: np.ndarray) -> None:
    values = set(np.unique(y).tolist())
    if not values <= {0.0, 1.0}:
        raise TrainingError(f"labels must be 0/1, got {sorted(values)}")
    if len(values) < 2:
        raise TrainingError("training data contains a single class")


def check_schema(expected: str | None, given: str | None) -> None:
    if expected is not None and given is not None and expected != given:
        raise SchemaMismatchError(
            f"model trained under schema {expected[:12]} but features use {given[:12]}"
        )
