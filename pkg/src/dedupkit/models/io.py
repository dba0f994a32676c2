"""JSON model files.

Floats are written with ``repr`` precision (shortest round-trip form), so a
loaded model reproduces predictions bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .gbdt import GbdtConfig, GbdtModel, RegressionTree
from .nn import NeuralNetConfig, NeuralNetModel

FORMAT = "dedupkit-model"
VERSION = 1


def model_to_dict(model) -> dict:
    if isinstance(model, GbdtModel):
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "gbdt",
            "config": model.config.to_dict(),
            "schema_digest": model.schema_digest,
            "n_features": model.n_features,
            "initial_score": model.initial_score,
            "trees": [t.to_dict() for t in model.trees],
            "train_loss": list(model.train_loss),
        }
    if isinstance(model, NeuralNetModel):
        return {
            "format": FORMAT,
            "version": VERSION,
            "kind": "nn",
            "config": model.config.to_dict() if model.config else None,
            "schema_digest": model.schema_digest,
            "weights": [W.tolist() for W in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "train_loss": list(model.train_loss),
        }
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    try:
        if d.get("format") != FORMAT or d.get("version") != VERSION:
            raise FormatError(f"not a {FORMAT} v{VERSION} file")
        if d["kind"] == "gbdt":
            return GbdtModel(
                initial_score=float(d["initial_score"]),
                trees=[RegressionTree.from_dict(t) for t in d["trees"]],
                config=GbdtConfig(**d["config"]),
                schema_digest=d["schema_digest"],
                n_features=int(d["n_features"]),
                train_loss=[float(x) for x in d.get("train_loss", [])],
            )
        if d["kind"] == "nn":
            cfg = d["config"]
            return NeuralNetModel(
                weights=[np.asarray(W, dtype=np.float64) for W in d["weights"]],
                biases=[np.asarray(b, dtype=np.float64) for b in d["biases"]],
                config=NeuralNetConfig(**cfg) if cfg is not None else None,
                schema_digest=d["schema_digest"],
                train_loss=[float(x) for x in d.get("train_loss", [])],
            )
        raise FormatError(f"unknown model kind {d['kind']!r}")
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"corrupt model: {exc}") from exc


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":")) + "\n"


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: str | Path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return model_from_dict(d)
