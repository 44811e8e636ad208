"""Decision stumps and the exhaustive weighted-error stump search.

The search enumerates every feature, every candidate threshold (midpoints
between consecutive distinct sorted values, plus one below the minimum and one
above the maximum), and both polarities, and returns the stump of minimum
weighted error with ties broken by (lower feature index, lower threshold,
polarity +1 first).

Weighted errors are compared as exact correctly-rounded sums (``math.fsum``),
so the selection is independent of row order and bit-for-bit reproducible; a
fast vectorized pass narrows the candidates first, and every candidate within
a slack band of the coarse minimum is re-scored exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData
from .features import FeatureRow

# Coarse numpy sums differ from exact sums by at most ~n ulp; the band is
# orders of magnitude wider, so the exact argmin always survives the cut.
_COARSE_BAND = 1e-9


@dataclass(frozen=True)
class Stump:
    """Depth-1 threshold classifier: +1 if polarity * (x[f] - threshold) > 0 else -1.

    Internally labels are +-1 (+1 = OOC, -1 = NOOC); ``alpha`` is the ensemble
    weight once boosted.
    """

    feature_index: int
    threshold: float
    polarity: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")

    def predict_value(self, features) -> int:
        return 1 if self.polarity * (features[self.feature_index] - self.threshold) > 0 else -1

    def predict_column(self, column: np.ndarray) -> np.ndarray:
        return np.where(self.polarity * (column - self.threshold) > 0, 1, -1)


def candidate_thresholds(values) -> list[float]:
    """Midpoints between consecutive distinct sorted values, plus one below
    the minimum and one above the maximum."""
    distinct = sorted(set(float(v) for v in values))
    cands = [distinct[0] - 1.0]
    cands.extend((a + b) / 2.0 for a, b in zip(distinct, distinct[1:]))
    cands.append(distinct[-1] + 1.0)
    return cands


def rows_to_arrays(rows: list[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and +-1 label vector (label 1 -> +1, 0 -> -1)."""
    X = np.array([row.features for row in rows], dtype=np.float64)
    y = np.array([1 if row.label == 1 else -1 for row in rows], dtype=np.float64)
    return X, y


def _exact_misclassified_mass(column, y, weights, threshold: float, polarity: int) -> float:
    mass = [
        w
        for x, label, w in zip(column, y, weights)
        if (1 if polarity * (x - threshold) > 0 else -1) != label
    ]
    return math.fsum(mass)


def best_stump_arrays(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[Stump, float]:
    """Search over prebuilt arrays; returns (stump, exact weighted error)."""
    n, n_features = X.shape
    total_exact = math.fsum(w)

    # Coarse pass: misclassified mass for every (feature, threshold, polarity).
    per_feature: list[tuple[list[float], np.ndarray]] = []
    coarse_min = math.inf
    for j in range(n_features):
        column = X[:, j]
        cands = candidate_thresholds(column)
        thr = np.asarray(cands, dtype=np.float64)
        # preds_plus[t, i] = +1 iff x_i > thr_t  (polarity +1)
        above = column[None, :] > thr[:, None]
        preds_plus = np.where(above, 1.0, -1.0)
        mass_plus = (preds_plus != y[None, :]) @ w
        total_np = float(w.sum())
        mass_minus = total_np - mass_plus
        per_feature.append((cands, np.stack([mass_plus, mass_minus], axis=1)))
        feature_min = float(np.min(per_feature[-1][1]))
        coarse_min = min(coarse_min, feature_min)

    band = coarse_min + _COARSE_BAND * max(total_exact, 1.0)

    # Exact pass in canonical order; strict < keeps the first minimum, which
    # is exactly the documented tie rule.
    best: tuple[Stump, float] | None = None
    for j in range(n_features):
        cands, masses = per_feature[j]
        column = X[:, j]
        for t_index, threshold in enumerate(cands):
            for p_index, polarity in enumerate((1, -1)):
                if masses[t_index, p_index] > band:
                    continue
                mass = _exact_misclassified_mass(column, y, w, threshold, polarity)
                error = mass / total_exact
                if best is None or error < best[1]:
                    best = (Stump(j, threshold, polarity), error)
    assert best is not None
    return best


def best_stump(rows: list[FeatureRow], weights) -> Stump:
    """Minimum weighted-error stump over labeled rows. See module docstring."""
    stump, _ = best_stump_with_error(rows, weights)
    return stump


def best_stump_with_error(rows: list[FeatureRow], weights) -> tuple[Stump, float]:
    rows = list(rows)
    if not rows:
        raise DegenerateData("no rows")
    labels = {row.label for row in rows}
    if None in labels:
        raise ValueError("all rows must be labeled")
    if len(labels) < 2:
        raise DegenerateData("all rows share one label")

    w = np.asarray(list(weights), dtype=np.float64)
    if w.shape != (len(rows),):
        raise ValueError(f"need one weight per row: {w.shape[0]} weights, {len(rows)} rows")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if not math.fsum(w) > 0:
        raise ValueError("weights must not sum to zero")

    X, y = rows_to_arrays(rows)
    return best_stump_arrays(X, y, w)


def stump_weighted_error(stump: Stump, rows: list[FeatureRow], weights) -> float:
    """Exact weighted error of one stump (same arithmetic as the search)."""
    w = list(weights)
    X, y = rows_to_arrays(list(rows))
    mass = _exact_misclassified_mass(X[:, stump.feature_index], y, w, stump.threshold, stump.polarity)
    return mass / math.fsum(w)
