"""Random forest of depth-limited Gini trees, seeded and bootstrap-sampled."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import DegenerateData, FeatureOrderMismatch
from .features import FEATURE_ORDER, FeatureRow, require_labeled, rows_hash, uniform_feature_order

DEFAULT_TREES = 100
DEFAULT_MAX_DEPTH = 4
DEFAULT_MAX_FEATURES = 3  # round(sqrt(8))


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature_index/threshold/left/right) or leaf (prediction)."""

    prediction: int | None = None
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    def predict_value(self, features) -> int:
        node = self
        while node.prediction is None:
            node = node.left if features[node.feature_index] < node.threshold else node.right
        return node.prediction

    def to_dict(self) -> dict:
        if self.prediction is not None:
            return {"leaf": self.prediction}
        return {
            "f": self.feature_index,
            "t": self.threshold,
            "l": self.left.to_dict(),
            "r": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TreeNode":
        if "leaf" in obj:
            return cls(prediction=int(obj["leaf"]))
        return cls(
            feature_index=int(obj["f"]),
            threshold=float(obj["t"]),
            left=cls.from_dict(obj["l"]),
            right=cls.from_dict(obj["r"]),
        )


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[TreeNode, ...]
    max_depth: int
    max_features: int
    bootstrap: bool
    seed: int
    feature_order: tuple[str, ...] = FEATURE_ORDER
    training_meta: MappingProxyType = MappingProxyType({})


def _gini_best_split(X: np.ndarray, y: np.ndarray, feature_subset) -> tuple[int, float] | None:
    """Best (feature, threshold) by weighted Gini; None if nothing splits.

    Ties fall to the lower feature index, then the lower threshold.
    """
    n = len(y)
    best: tuple[float, int, float] | None = None
    for j in feature_subset:
        column = X[:, j]
        order = np.argsort(column, kind="stable")
        xs, ys = column[order], y[order]
        boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundaries.size == 0:
            continue
        cum_pos = np.cumsum(ys == 1)
        left_n = boundaries + 1
        right_n = n - left_n
        left_pos = cum_pos[boundaries]
        right_pos = cum_pos[-1] - left_pos
        p_left = left_pos / left_n
        p_right = right_pos / right_n
        gini_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
        gini_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
        weighted = (left_n * gini_left + right_n * gini_right) / n
        # np.argmin returns the first minimum: lowest threshold within the
        # feature; features iterate ascending, so strict < keeps the tie rule.
        idx = int(np.argmin(weighted))
        score = float(weighted[idx])
        threshold = float((xs[boundaries[idx]] + xs[boundaries[idx] + 1]) / 2.0)
        if best is None or score < best[0]:
            best = (score, j, threshold)
    if best is None:
        return None
    return best[1], best[2]


def _majority(y: np.ndarray) -> int:
    pos = int(np.sum(y == 1))
    return 1 if pos * 2 >= len(y) else 0


def _build_tree(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int,
                max_features: int, rng: np.random.Generator) -> TreeNode:
    if depth >= max_depth or len(set(y.tolist())) < 2:
        return TreeNode(prediction=_majority(y))
    n_features = X.shape[1]
    subset = sorted(rng.choice(n_features, size=min(max_features, n_features), replace=False).tolist())
    split = _gini_best_split(X, y, subset)
    if split is None:
        return TreeNode(prediction=_majority(y))
    j, threshold = split
    mask = X[:, j] < threshold
    left = _build_tree(X[mask], y[mask], depth + 1, max_depth, max_features, rng)
    right = _build_tree(X[~mask], y[~mask], depth + 1, max_depth, max_features, rng)
    return TreeNode(feature_index=j, threshold=threshold, left=left, right=right)


def train_random_forest(
    rows: list[FeatureRow],
    trees: int = DEFAULT_TREES,
    max_depth: int = DEFAULT_MAX_DEPTH,
    seed: int = 0,
    *,
    max_features: int = DEFAULT_MAX_FEATURES,
    bootstrap: bool = True,
) -> RandomForestModel:
    rows = require_labeled(rows)
    if len({row.label for row in rows}) < 2:
        raise DegenerateData("all rows share one label")
    if trees < 1 or max_depth < 1 or max_features < 1:
        raise ValueError("trees, max_depth and max_features must be >= 1")

    X = np.array([row.features for row in rows], dtype=np.float64)
    y = np.array([row.label for row in rows], dtype=np.int64)
    n = len(rows)
    rng = np.random.default_rng(seed)

    built = []
    for _ in range(trees):
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            built.append(_build_tree(X[idx], y[idx], 0, max_depth, max_features, rng))
        else:
            built.append(_build_tree(X, y, 0, max_depth, max_features, rng))

    return RandomForestModel(
        trees=tuple(built),
        max_depth=max_depth,
        max_features=max_features,
        bootstrap=bootstrap,
        seed=seed,
        feature_order=uniform_feature_order(rows),
        training_meta=MappingProxyType({"rows": n, "rows_hash": rows_hash(rows)}),
    )


def predict(model: RandomForestModel, row: FeatureRow) -> tuple[int, float]:
    """Majority vote; margin is the signed vote share in [-1, 1]."""
    if tuple(row.feature_order) != tuple(model.feature_order):
        raise FeatureOrderMismatch(
            f"row order {row.feature_order} != model order {model.feature_order}"
        )
    votes_pos = sum(tree.predict_value(row.features) for tree in model.trees)
    total = len(model.trees)
    margin = (2 * votes_pos - total) / total
    return (1 if votes_pos * 2 >= total else 0), margin
