"""Discrete two-class boosting over decision stumps.

Per round: fit the best stump under the current row weights, compute its
weighted error, convert to a stump weight alpha = 0.5*ln((1-e)/e), upweight
the misclassified rows, renormalize. A round whose stump cannot beat chance
(error >= 0.5) is discarded and training stops; training also stops once the
ensemble's training error reaches zero.

Ensemble prediction is the sign of the alpha-weighted stump vote, with a zero
margin mapped to OOC (ties flag for review).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from types import MappingProxyType

import numpy as np

from .errors import DegenerateData, FeatureOrderMismatch
from .features import FEATURE_ORDER, FeatureRow, require_labeled, rows_hash, uniform_feature_order
from .stumps import Stump, best_stump_arrays, rows_to_arrays

DEFAULT_ROUNDS = 50
_ERROR_CLAMP = 1e-10


@dataclass(frozen=True)
class RoundInfo:
    """Diagnostics for one boosting round (used by the invariant checks)."""

    round_number: int
    stump: Stump
    error_raw: float
    error_clamped: float
    alpha: float
    weight_sum: float
    misclassified_mass: float


@dataclass(frozen=True)
class AdaBoostModel:
    stumps: tuple[Stump, ...]
    rounds: int
    feature_order: tuple[str, ...] = FEATURE_ORDER
    training_meta: MappingProxyType = MappingProxyType({})

    def __post_init__(self):
        if not self.stumps:
            raise ValueError("ensemble must contain at least one stump")


def train_adaboost(
    rows: list[FeatureRow],
    rounds: int = DEFAULT_ROUNDS,
    *,
    trace_sink: list[RoundInfo] | None = None,
) -> AdaBoostModel:
    rows = require_labeled(rows)
    if len(rows) < 2:
        raise DegenerateData(f"need >= 2 rows, have {len(rows)}")
    if len({row.label for row in rows}) < 2:
        raise DegenerateData("all rows share one label")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")

    X, y = rows_to_arrays(rows)
    n = len(rows)
    w = np.full(n, 1.0 / n, dtype=np.float64)
    stumps: list[Stump] = []
    margins = np.zeros(n, dtype=np.float64)

    for round_number in range(1, rounds + 1):
        stump, error_raw = best_stump_arrays(X, y, w)
        if error_raw >= 0.5:
            break  # weak learner no better than chance; discard and stop
        error = min(max(error_raw, _ERROR_CLAMP), 1.0 - _ERROR_CLAMP)
        alpha = 0.5 * math.log((1.0 - error) / error)
        stump = replace(stump, alpha=alpha)
        stumps.append(stump)

        h = stump.predict_column(X[:, stump.feature_index])
        w = w * np.exp(-alpha * y * h)
        w = w / math.fsum(w)

        if trace_sink is not None:
            trace_sink.append(
                RoundInfo(
                    round_number=round_number,
                    stump=stump,
                    error_raw=error_raw,
                    error_clamped=error,
                    alpha=alpha,
                    weight_sum=math.fsum(w),
                    misclassified_mass=math.fsum(w[h != y]),
                )
            )

        margins = margins + alpha * h
        ensemble_preds = np.where(margins >= 0.0, 1.0, -1.0)
        if not np.any(ensemble_preds != y):
            break

    if not stumps:
        raise DegenerateData("no stump beat chance on the first round")

    return AdaBoostModel(
        stumps=tuple(stumps),
        rounds=rounds,
        feature_order=uniform_feature_order(rows),
        training_meta=MappingProxyType({"rows": n, "rows_hash": rows_hash(rows)}),
    )


def predict(model: AdaBoostModel, row: FeatureRow, *, zero_margin_label: int = 1) -> tuple[int, float]:
    """Label in {0, 1} plus the signed ensemble margin."""
    if tuple(row.feature_order) != tuple(model.feature_order):
        raise FeatureOrderMismatch(
            f"row order {row.feature_order} != model order {model.feature_order}"
        )
    margin = sum(s.alpha * s.predict_value(row.features) for s in model.stumps)
    if margin > 0:
        return 1, margin
    if margin < 0:
        return 0, margin
    return zero_margin_label, margin
