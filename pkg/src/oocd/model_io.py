"""Versioned model files: JSON with a format tag, feature order, classifier
kind, and parameters. Floats round-trip via shortest-repr, so a loaded model
reproduces bit-identical predictions."""

from __future__ import annotations

import json
from types import MappingProxyType

from . import adaboost, forest, svm
from .errors import CorruptModel, UnsupportedVersion
from .features import FeatureRow
from .forest import RandomForestModel, TreeNode
from .stumps import Stump
from .svm import LinearSvmModel
from .adaboost import AdaBoostModel
from .util import atomic_write_text

FORMAT_VERSION = 1

KIND_ADABOOST = "adaboost"
KIND_FOREST = "random_forest"
KIND_SVM = "linear_svm"


def model_kind(model) -> str:
    if isinstance(model, AdaBoostModel):
        return KIND_ADABOOST
    if isinstance(model, RandomForestModel):
        return KIND_FOREST
    if isinstance(model, LinearSvmModel):
        return KIND_SVM
    raise TypeError(f"unknown model type {type(model).__name__}")


def predict_row(model, row: FeatureRow, *, zero_margin_label: int = 1) -> tuple[int, float]:
    """Uniform (label, margin) prediction across the three classifier kinds."""
    if isinstance(model, AdaBoostModel):
        return adaboost.predict(model, row, zero_margin_label=zero_margin_label)
    if isinstance(model, RandomForestModel):
        return forest.predict(model, row)
    if isinstance(model, LinearSvmModel):
        return svm.predict(model, row)
    raise TypeError(f"unknown model type {type(model).__name__}")


def _model_to_dict(model) -> dict:
    kind = model_kind(model)
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "feature_order": list(model.feature_order),
        "training_meta": dict(model.training_meta),
    }
    if kind == KIND_ADABOOST:
        doc["params"] = {
            "rounds": model.rounds,
            "stumps": [
                {
                    "feature_index": s.feature_index,
                    "threshold": s.threshold,
                    "polarity": s.polarity,
                    "alpha": s.alpha,
                }
                for s in model.stumps
            ],
        }
    elif kind == KIND_FOREST:
        doc["params"] = {
            "max_depth": model.max_depth,
            "max_features": model.max_features,
            "bootstrap": model.bootstrap,
            "seed": model.seed,
            "trees": [tree.to_dict() for tree in model.trees],
        }
    else:
        doc["params"] = {
            "weights": list(model.weights),
            "bias": model.bias,
            "mean": list(model.mean),
            "std": list(model.std),
            "lambda": model.lambda_,
            "epochs": model.epochs,
            "seed": model.seed,
        }
    return doc


def save_model(model, path: str) -> None:
    text = json.dumps(_model_to_dict(model), sort_keys=True, indent=2, allow_nan=False)
    atomic_write_text(path, text + "\n")


def _require(params: dict, *names):
    for name in names:
        if name not in params:
            raise CorruptModel(f"model file missing field {name!r}")
    return [params[name] for name in names]


def load_model(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"not a valid model file: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise CorruptModel("model file is not an object")

    version = doc.get("format_version")
    if version is None:
        raise CorruptModel("model file has no format_version tag")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {version!r} is not supported (expected {FORMAT_VERSION})")

    try:
        kind = doc["kind"]
        feature_order = tuple(doc["feature_order"])
        training_meta = MappingProxyType(dict(doc.get("training_meta", {})))
        params = doc["params"]
    except (KeyError, TypeError) as exc:
        raise CorruptModel(f"model file missing field: {exc}") from exc

    try:
        if kind == KIND_ADABOOST:
            stump_docs, rounds = _require(params, "stumps", "rounds")
            if not stump_docs:
                raise CorruptModel("empty ensemble")
            stumps = tuple(
                Stump(
                    feature_index=int(s["feature_index"]),
                    threshold=float(s["threshold"]),
                    polarity=int(s["polarity"]),
                    alpha=float(s["alpha"]),
                )
                for s in stump_docs
            )
            return AdaBoostModel(
                stumps=stumps, rounds=int(rounds),
                feature_order=feature_order, training_meta=training_meta,
            )
        if kind == KIND_FOREST:
            trees, max_depth, max_features, bootstrap, seed = _require(
                params, "trees", "max_depth", "max_features", "bootstrap", "seed"
            )
            if not trees:
                raise CorruptModel("empty forest")
            return RandomForestModel(
                trees=tuple(TreeNode.from_dict(t) for t in trees),
                max_depth=int(max_depth),
                max_features=int(max_features),
                bootstrap=bool(bootstrap),
                seed=int(seed),
                feature_order=feature_order,
                training_meta=training_meta,
            )
        if kind == KIND_SVM:
            weights, bias, mean, std, lam, epochs, seed = _require(
                params, "weights", "bias", "mean", "std", "lambda", "epochs", "seed"
            )
            return LinearSvmModel(
                weights=tuple(float(v) for v in weights),
                bias=float(bias),
                mean=tuple(float(v) for v in mean),
                std=tuple(float(v) for v in std),
                lambda_=float(lam),
                epochs=int(epochs),
                seed=int(seed),
                feature_order=feature_order,
                training_meta=training_meta,
            )
    except CorruptModel:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"invalid model parameters: {exc}") from exc
    raise CorruptModel(f"unknown classifier kind {kind!r}")
