"""Classifier input rows: fixed 8-dim feature order, assembly, and file IO."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .errors import MalformedRecord, MixedSources
from .prompting import GptFeatureVector
from .similarity import SimilarityVector
from .util import atomic_write_text

# The one documented order. Models store it and refuse rows that declare a
# different one; no scaling or normalization is applied at assembly.
FEATURE_ORDER = ("s_base", "s_large", "c1", "c2", "c3", "c4", "c5", "c6")


@dataclass(frozen=True)
class FeatureRow:
    record_id: str
    features: tuple[float, ...]
    label: int | None = None
    sim_source: str | None = None
    imputed: bool = False
    feature_order: tuple[str, ...] = FEATURE_ORDER

    def __post_init__(self):
        if len(self.features) != len(self.feature_order):
            raise ValueError(
                f"row {self.record_id!r}: expected {len(self.feature_order)} features, "
                f"got {len(self.features)}"
            )
        if self.feature_order == FEATURE_ORDER:
            s_base, s_large = self.features[0], self.features[1]
            for name, value in (("s_base", s_base), ("s_large", s_large)):
                if not (0.0 <= value <= 1.0):
                    raise ValueError(f"row {self.record_id!r}: {name} {value} outside [0, 1]")
            for i, value in enumerate(self.features[2:], start=1):
                if not float(value).is_integer() or not (0.0 <= value <= 9.0):
                    raise ValueError(
                        f"row {self.record_id!r}: c{i} must be an integer in [0, 9], got {value}"
                    )
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"row {self.record_id!r}: label must be 0 or 1, got {self.label!r}")


def assemble_features(
    sim: SimilarityVector,
    gpt: GptFeatureVector,
    record_id: str,
    label: int | None = None,
    imputed: bool = False,
) -> FeatureRow:
    """Fixed order [s_base, s_large, c1..c6]; values pass through untouched."""
    return FeatureRow(
        record_id=record_id,
        features=(sim.s_base, sim.s_large, *(float(c) for c in gpt.as_tuple())),
        label=label,
        sim_source=sim.source,
        imputed=imputed,
    )


def ensure_single_source(rows, allow_mixed: bool = False) -> None:
    sources = {row.sim_source for row in rows if row.sim_source is not None}
    if len(sources) > 1 and not allow_mixed:
        raise MixedSources(
            f"rows mix similarity sources {sorted(sources)}; "
            "pass allow_mixed to accept this deliberately"
        )


def require_labeled(rows) -> list[FeatureRow]:
    rows = list(rows)
    for row in rows:
        if row.label is None:
            raise ValueError(f"row {row.record_id!r} has no label; training requires labels")
    return rows


def uniform_feature_order(rows) -> tuple[str, ...]:
    """The single feature order shared by all rows (models store it)."""
    from .errors import FeatureOrderMismatch

    orders = {tuple(row.feature_order) for row in rows}
    if len(orders) != 1:
        raise FeatureOrderMismatch(f"rows declare {len(orders)} different feature orders")
    return next(iter(orders))


def rows_hash(rows) -> str:
    """Stable content hash of rows, for model training metadata."""
    payload = json.dumps(
        [
            {"id": r.record_id, "features": list(r.features), "label": r.label}
            for r in rows
        ],
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_feature_rows(rows, path: str) -> None:
    lines = []
    for r in rows:
        obj = {
            "id": r.record_id,
            "features": list(r.features),
            "feature_order": list(r.feature_order),
            "label": r.label,
            "sim_source": r.sim_source,
            "imputed": r.imputed,
        }
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def read_feature_rows(path: str) -> list[FeatureRow]:
    rows = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_number, f"invalid record syntax: {exc.msg}") from exc
            try:
                row = FeatureRow(
                    record_id=obj["id"],
                    features=tuple(float(v) for v in obj["features"]),
                    label=obj.get("label"),
                    sim_source=obj.get("sim_source"),
                    imputed=bool(obj.get("imputed", False)),
                    feature_order=tuple(obj.get("feature_order", FEATURE_ORDER)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(line_number, str(exc)) from exc
            if row.record_id in seen:
                raise MalformedRecord(line_number, f"duplicate id {row.record_id!r}")
            seen.add(row.record_id)
            rows.append(row)
    return rows
