"""Training/validation protocols.

* balanced k-fold cross-validation on 1:1 undersampled data;
* leave-one-client-out: train on the undersampled other clients, score the
  held-out client at its natural imbalance, pool all held-out scores;
* a grid scan over hyperparameters scored by mean cross-validated ROC-AUC.

A "model" argument is either a model config (``GbdtConfig`` /
``NeuralNetConfig``) or a trainer callable ``(X, y) -> scorer`` where
``scorer(X)`` returns probabilities.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..core import FeatureVector
from ..errors import ConfigError, DegenerateError, ImbalanceWarning
from ..models import GbdtConfig, NeuralNetConfig, train_model
from ..seeding import derive_seed
from .metrics import (
    DEFAULT_THRESHOLDS,
    CurvePoint,
    fbeta_sweep,
    pr_auc,
    pr_curve,
    roc_auc,
    roc_curve,
)

MEAN_FPR_GRID = np.linspace(0.0, 1.0, 201)
DEFAULT_BETAS = (1.0, 5.0)

Scorer = Callable[[np.ndarray], np.ndarray]


def to_arrays(data: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    if any(v.label is None for v in data):
        raise ConfigError("unlabeled feature vectors cannot be used for training or evaluation")
    X = np.array([v.values for v in data], dtype=np.float64).reshape(len(data), -1)
    y = np.array([v.label for v in data], dtype=np.float64)
    return X, y


def _labels_of(data) -> np.ndarray:
    if len(data) and isinstance(data[0], FeatureVector):
        return np.array([v.label for v in data])
    return np.asarray(data)


def _fit(model, X: np.ndarray, y: np.ndarray) -> Scorer:
    if isinstance(model, (GbdtConfig, NeuralNetConfig)):
        return train_model(model, X, y).predict_proba
    if callable(model):
        return model(X, y)
    raise TypeError(f"model must be a config or trainer callable, got {type(model).__name__}")


def undersample(data: Sequence[FeatureVector], seed: int) -> list[FeatureVector]:
    """Keep every duplicate and as many randomly chosen non-duplicates."""
    pos = [v for v in data if v.label == 1]
    neg = [v for v in data if v.label == 0]
    if not pos:
        raise ConfigError("undersampling needs at least one duplicate")
    rng = np.random.default_rng(seed)
    if len(neg) < len(pos):
        warnings.warn(f"only {len(neg)} non-duplicates for {len(pos)} duplicates; kept all",
                      ImbalanceWarning)
        chosen = neg
    else:
        picks = np.sort(rng.choice(len(neg), size=len(pos), replace=False))
        chosen = [neg[i] for i in picks]
    out = pos + chosen
    return [out[i] for i in rng.permutation(len(out))]


def stratified_kfold(data, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Stratified folds as (train_idx, val_idx) pairs.

    Each class is shuffled and dealt round-robin, starting where the previous
    class stopped, so per-class and total fold sizes differ by at most one.
    """
    y = _labels_of(data)
    if k < 2:
        raise ConfigError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in (1, 0):
        idx = np.nonzero(y == cls)[0]
        if len(idx) < k:
            raise ConfigError(f"class {cls} has {len(idx)} items, fewer than k={k}")
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            folds[(offset + j) % k].append(int(i))
        offset = (offset + len(idx)) % k
    out = []
    everything = np.arange(len(y))
    for f in folds:
        val = np.sort(np.array(f, dtype=np.int64))
        out.append((np.setdiff1d(everything, val), val))
    return out


@dataclass
class EvalReport:
    roc: list[CurvePoint]
    pr: list[CurvePoint]
    roc_auc: float
    pr_auc: float
    f_scores: dict[str, list] = field(default_factory=dict)
    breakdown: list[dict[str, Any]] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)
    echo: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "roc_auc": self.roc_auc,
            "pr_auc": self.pr_auc,
            "roc": [p.to_dict() for p in self.roc],
            "pr": [p.to_dict() for p in self.pr],
            "f_scores": {b: [p.to_dict() for p in pts] for b, pts in self.f_scores.items()},
            "breakdown": self.breakdown,
            **self.extra,
            "echo": self.echo,
        }


def _config_echo(model) -> dict:
    if isinstance(model, (GbdtConfig, NeuralNetConfig)):
        return {"family": "gbdt" if isinstance(model, GbdtConfig) else "nn", **model.to_dict()}
    return {"family": getattr(model, "__name__", type(model).__name__)}


def score_report(scores, labels, thresholds=DEFAULT_THRESHOLDS, betas=DEFAULT_BETAS) -> EvalReport:
    """ROC, PR and F-beta sweeps for one scored set."""
    return EvalReport(
        roc=roc_curve(scores, labels),
        pr=pr_curve(scores, labels),
        roc_auc=roc_auc(scores, labels),
        pr_auc=pr_auc(scores, labels),
        f_scores={_beta_key(b): fbeta_sweep(scores, labels, b, thresholds) for b in betas},
    )


def _beta_key(beta: float) -> str:
    return f"{beta:g}"


def mean_roc(curves: Sequence[Sequence[CurvePoint]]) -> list[CurvePoint]:
    """Vertical average of ROC curves on a fixed false-positive-rate grid."""
    tprs = []
    for pts in curves:
        fpr = np.array([p.x for p in pts])
        tpr = np.array([p.y for p in pts])
        t = np.interp(MEAN_FPR_GRID, fpr, tpr)
        t[0] = 0.0
        tprs.append(t)
    mean = np.mean(tprs, axis=0)
    mean[-1] = 1.0
    return [CurvePoint(None, float(x), float(y)) for x, y in zip(MEAN_FPR_GRID, mean)]


def run_cv_experiment(data: Sequence[FeatureVector], model, k: int = 5, seed: int = 0) -> EvalReport:
    """k-fold cross-validation; expects data already balanced 1:1."""
    X, y = to_arrays(data)
    folds = stratified_kfold(y, k, derive_seed(seed, "kfold"))
    per_fold, curves, aucs, aps = [], [], [], []
    for i, (tr, va) in enumerate(folds):
        scorer = _fit(model, X[tr], y[tr])
        s = np.asarray(scorer(X[va]), dtype=np.float64)
        curve = roc_curve(s, y[va])
        auc, ap = roc_auc(s, y[va]), pr_auc(s, y[va])
        curves.append(curve)
        aucs.append(auc)
        aps.append(ap)
        per_fold.append({
            "fold": i,
            "n_train": int(len(tr)),
            "n_validation": int(len(va)),
            "n_validation_positive": int(y[va].sum()),
            "roc_auc": auc,
            "pr_auc": ap,
            "roc": [p.to_dict() for p in curve],
        })
    return EvalReport(
        roc=mean_roc(curves),
        pr=[],
        roc_auc=float(np.mean(aucs)),
        pr_auc=float(np.mean(aps)),
        breakdown=per_fold,
        extra={"roc_auc_std": float(np.std(aucs)), "fold_roc_auc": aucs},
        echo={"protocol": "kfold", "k": k, "seed": seed, "model": _config_echo(model)},
    )


def run_loco_experiment(groups: Mapping[str, Sequence[FeatureVector]], model, seed: int = 0,
                        thresholds=DEFAULT_THRESHOLDS, betas=DEFAULT_BETAS) -> EvalReport:
    """Leave-one-client-out on imbalanced data, pooled into one report."""
    clients = sorted(groups)
    if len(clients) < 2:
        raise ConfigError("leave-one-client-out needs at least two clients")
    pooled_scores, pooled_labels, rows = [], [], []
    for client in clients:
        rest = [v for c in clients if c != client for v in groups[c]]
        train = undersample(rest, derive_seed(seed, "loco-undersample", client))
        held = list(groups[client])
        train_keys = {v.pair.key for v in train}
        leaked = train_keys.intersection(v.pair.key for v in held)
        assert not leaked, f"validation pairs of {client} leaked into training"
        X_tr, y_tr = to_arrays(train)
        X_va, y_va = to_arrays(held)
        scorer = _fit(model, X_tr, y_tr)
        s = np.asarray(scorer(X_va), dtype=np.float64)
        row: dict[str, Any] = {
            "client": client,
            "n_train": len(train),
            "n_validation": len(held),
            "n_validation_positive": int(y_va.sum()),
            "train_clients": [c for c in clients if c != client],
        }
        try:
            row["roc_auc"] = roc_auc(s, y_va)
        except DegenerateError:
            row["roc_auc"] = None
        try:
            row["pr_auc"] = pr_auc(s, y_va)
            row["degenerate_pr"] = False
        except DegenerateError:
            row["pr_auc"] = None
            row["degenerate_pr"] = True
        rows.append(row)
        pooled_scores.append(s)
        pooled_labels.append(y_va)
    scores = np.concatenate(pooled_scores)
    labels = np.concatenate(pooled_labels)
    report = score_report(scores, labels, thresholds, betas)
    report.breakdown = rows
    report.extra = {"n_pooled": int(len(scores)), "n_pooled_positive": int(labels.sum())}
    report.echo = {"protocol": "leave-one-client-out", "seed": seed, "model": _config_echo(model)}
    return report


@dataclass
class GridScanResult:
    best_config: Any
    table: list[dict[str, Any]]

    def to_dict(self) -> dict:
        return {"best": self.best_config.to_dict(), "table": self.table}


def grid_scan(data: Sequence[FeatureVector], base_config, grid: Mapping[str, Sequence],
              k: int = 5, seed: int = 0) -> GridScanResult:
    """Exhaustive scan; cells ranked by mean CV ROC-AUC, ties to the smaller
    model, then to grid order."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("grid must be non-empty in every dimension")
    names = list(grid)
    table, best, best_key = [], None, None
    for order, values in enumerate(itertools.product(*(grid[n] for n in names))):
        params = dict(zip(names, values))
        try:
            cfg = replace(base_config, **params)
        except TypeError as exc:
            raise ConfigError(f"bad grid parameter: {exc}") from exc
        rep = run_cv_experiment(data, cfg, k, seed)
        table.append({"params": params, "mean_roc_auc": rep.roc_auc,
                      "std_roc_auc": rep.extra["roc_auc_std"]})
        key = (-rep.roc_auc, cfg.size, order)
        if best_key is None or key < best_key:
            best, best_key = cfg, key
    return GridScanResult(best, table)
