"""Linear SVM trained by primal subgradient descent (Pegasos-style) on hinge
loss with L2 regularization, over internally standardized features."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import DegenerateData, FeatureOrderMismatch
from .features import FEATURE_ORDER, FeatureRow, require_labeled, rows_hash, uniform_feature_order

DEFAULT_LAMBDA = 1e-3
DEFAULT_EPOCHS = 200


@dataclass(frozen=True)
class LinearSvmModel:
    weights: tuple[float, ...]
    bias: float
    mean: tuple[float, ...]  # standardization stats from the training rows
    std: tuple[float, ...]
    lambda_: float
    epochs: int
    seed: int
    feature_order: tuple[str, ...] = FEATURE_ORDER
    training_meta: MappingProxyType = MappingProxyType({})


def train_linear_svm(
    rows: list[FeatureRow],
    lambda_: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> LinearSvmModel:
    rows = require_labeled(rows)
    if len({row.label for row in rows}) < 2:
        raise DegenerateData("all rows share one label")
    if lambda_ <= 0 or epochs < 1:
        raise ValueError("lambda_ must be positive and epochs >= 1")

    X = np.array([row.features for row in rows], dtype=np.float64)
    y = np.array([1.0 if row.label == 1 else -1.0 for row in rows])
    n, d = X.shape

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)  # constant columns stay at zero after centering
    Xs = (X - mean) / std

    rng = np.random.default_rng(seed)
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lambda_ * t)
            w = (1.0 - eta * lambda_) * w
            if y[i] * (Xs[i] @ w + b) < 1.0:
                w = w + eta * y[i] * Xs[i]
                b = b + eta * y[i]

    return LinearSvmModel(
        weights=tuple(w.tolist()),
        bias=float(b),
        mean=tuple(mean.tolist()),
        std=tuple(std.tolist()),
        lambda_=lambda_,
        epochs=epochs,
        seed=seed,
        feature_order=uniform_feature_order(rows),
        training_meta=MappingProxyType({"rows": n, "rows_hash": rows_hash(rows)}),
    )


def predict(model: LinearSvmModel, row: FeatureRow) -> tuple[int, float]:
    """Standardizes with the stored train-time stats, then signs the margin."""
    if tuple(row.feature_order) != tuple(model.feature_order):
        raise FeatureOrderMismatch(
            f"row order {row.feature_order} != model order {model.feature_order}"
        )
    margin = model.bias
    for x, w, m, s in zip(row.features, model.weights, model.mean, model.std):
        margin += w * (x - m) / s
    return (1 if margin >= 0 else 0), margin
