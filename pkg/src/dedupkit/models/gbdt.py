"""Gradient-boosted regression trees for binary classification.

Binomial deviance loss. Each round fits a least-squares regression tree to
the residuals ``y - sigmoid(F)``; leaf values are then replaced with a
single Newton step ``sum(residual) / sum(p * (1 - p))`` and the tree is added
to ``F`` scaled by the learning rate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, ShapeError, TrainingError
from .common import check_binary_targets, check_schema, expit, log_loss, prob_clip


@dataclass(frozen=True)
class GbdtConfig:
    n_estimators: int = 200
    learning_rate: float = 0.1
    max_depth: int = 4
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def size(self) -> int:
        return self.n_estimators


@dataclass
class RegressionTree:
    """Flat array tree. ``feature[i] == -1`` marks a leaf; samples with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def split_features(self) -> list[int]:
        """Split feature indices in node order (preorder)."""
        return [int(f) for f in self.feature if f >= 0]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )


def best_split(x_cols: np.ndarray, resid: np.ndarray, min_leaf: int):
    """Highest variance-reduction split over all columns of ``x_cols``.

    Ties go to the lowest feature index, then the lowest threshold. Returns
    ``(gain, feature, threshold)`` or ``None`` when no split reduces the
    squared error.
    """
    n, n_features = x_cols.shape
    total = resid.sum()
    base = total * total / n
    best = None
    for f in range(n_features):
        order = np.argsort(x_cols[:, f], kind="stable")
        xs = x_cols[order, f]
        cs = np.cumsum(resid[order])
        n_left = np.arange(1, n)
        ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not ok.any():
            continue
        sl = cs[:-1]
        gain = sl * sl / n_left + (total - sl) ** 2 / (n - n_left) - base
        gain = np.where(ok, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > 0 and (best is None or gain[i] > best[0]):
            thr = (xs[i] + xs[i + 1]) / 2
            if not xs[i] <= thr < xs[i + 1]:
                thr = xs[i]
            best = (float(gain[i]), f, float(thr))
    return best


def fit_tree(X: np.ndarray, resid: np.ndarray, hess: np.ndarray,
             max_depth: int, min_samples_leaf: int) -> RegressionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        h = hess[idx].sum()
        value.append(float(resid[idx].sum() / h) if h > 1e-150 else 0.0)
        if depth >= max_depth or len(idx) < 2 * min_samples_leaf:
            return node
        split = best_split(X[idx], resid[idx], min_samples_leaf)
        if split is None:
            return node
        _, f, thr = split
        mask = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        value[node] = 0.0
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(X)), 0)
    return RegressionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
    )


@dataclass
class GbdtModel:
    initial_score: float
    trees: list[RegressionTree]
    config: GbdtConfig
    schema_digest: str | None = None
    n_features: int = 20
    train_loss: list[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected (n, {self.n_features}) features, got {X.shape}")
        F = np.full(len(X), self.initial_score)
        for tree in self.trees:
            F += self.config.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X: np.ndarray, schema_digest: str | None = None) -> np.ndarray:
        check_schema(self.schema_digest, schema_digest)
        return prob_clip(expit(self.decision_function(X)))


def gbdt_train(X: np.ndarray, y: np.ndarray, config: GbdtConfig = GbdtConfig(),
               schema_digest: str | None = None) -> GbdtModel:
    """Fit a boosted ensemble. Deterministic: the split search has no random
    component, so ``config.seed`` only travels with the model."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError(f"bad training shapes {X.shape} / {y.shape}")
    if len(y) < 2:
        raise TrainingError("need at least two samples")
    check_binary_targets(y)
    p = y.mean()
    init = float(np.log(p / (1 - p)))
    F = np.full(len(y), init)
    losses = [log_loss(y, F)]
    trees = []
    for _ in range(config.n_estimators):
        prob = expit(F)
        resid = y - prob
        tree = fit_tree(X, resid, prob * (1 - prob), config.max_depth, config.min_samples_leaf)
        F = F + config.learning_rate * tree.predict(X)
        trees.append(tree)
        losses.append(log_loss(y, F))
    return GbdtModel(init, trees, config, schema_digest, X.shape[1], losses)


def gbdt_predict(model: GbdtModel, features, schema_digest: str | None = None) -> float:
    """Probability for a single feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got shape {x.shape}")
    return float(model.predict_proba(x[None, :], schema_digest)[0])
