"""Triplet dataset loading, validation, splitting, and fold construction.

Native file format: UTF-8, one JSON object per non-empty line with fields
``id``, ``image_path``, ``caption1``, ``caption2``, ``iou_score``, ``label``.
``image_path``, ``iou_score`` and ``label`` are optional; unknown keys are
ignored. ``label`` accepts the integers 0/1 or the strings "NOOC"/"OOC".
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .errors import MalformedRecord, TooFewRecords

LABEL_NOOC = 0
LABEL_OOC = 1

_LABEL_STRINGS = {"NOOC": LABEL_NOOC, "OOC": LABEL_OOC}

# Documented adapter from the challenge's public-test field names onto the
# native schema. Records without an explicit id get one from the line number.
CHALLENGE_FIELD_MAP = {
    "img_local_path": "image_path",
    "context_label": "label",
    "iou": "iou_score",
}

ADAPTERS = ("native", "challenge")


@dataclass(frozen=True)
class TripletRecord:
    """One dataset sample: an image reference plus two captions."""

    id: str
    caption1: str
    caption2: str
    image_path: str = ""
    iou_score: float | None = None
    label: int | None = None

    def __post_init__(self):
        if not self.caption1.strip():
            raise ValueError(f"record {self.id!r}: caption1 empty after trimming")
        if not self.caption2.strip():
            raise ValueError(f"record {self.id!r}: caption2 empty after trimming")
        if self.iou_score is not None and not (0.0 <= self.iou_score <= 1.0):
            raise ValueError(f"record {self.id!r}: iou_score {self.iou_score} outside [0, 1]")
        if self.label is not None and self.label not in (LABEL_NOOC, LABEL_OOC):
            raise ValueError(f"record {self.id!r}: label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of records; order is the file order."""

    records: tuple[TripletRecord, ...]
    source_path: str = "<memory>"

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValueError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def labeled(self) -> tuple[TripletRecord, ...]:
        return tuple(r for r in self.records if r.label is not None)

    def labels_by_id(self) -> dict[str, int]:
        return {r.id: r.label for r in self.records if r.label is not None}


@dataclass(frozen=True)
class SplitSpec:
    """Seeded train/test split parameters. Identical (seed, dataset) -> identical split."""

    seed: int
    train_fraction: float = 0.5
    stratify: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def _parse_label(value, line_number: int) -> int:
    if isinstance(value, bool):
        raise MalformedRecord(line_number, f"label must be 0/1 or NOOC/OOC, got {value!r}")
    if isinstance(value, int):
        if value in (LABEL_NOOC, LABEL_OOC):
            return value
        raise MalformedRecord(line_number, f"label must be 0 or 1, got {value}")
    if isinstance(value, str) and value in _LABEL_STRINGS:
        return _LABEL_STRINGS[value]
    raise MalformedRecord(line_number, f"label must be 0/1 or NOOC/OOC, got {value!r}")


def _record_from_obj(obj: dict, line_number: int, fallback_id: str) -> TripletRecord:
    if not isinstance(obj, dict):
        raise MalformedRecord(line_number, "record is not an object")

    rec_id = obj.get("id", fallback_id)
    if not isinstance(rec_id, str) or not rec_id:
        raise MalformedRecord(line_number, f"id must be a non-empty string, got {rec_id!r}")

    for name in ("caption1", "caption2"):
        if name not in obj:
            raise MalformedRecord(line_number, f"missing {name}")
        if not isinstance(obj[name], str) or not obj[name].strip():
            raise MalformedRecord(line_number, f"{name} must be a non-empty string")

    image_path = obj.get("image_path", "")
    if not isinstance(image_path, str):
        raise MalformedRecord(line_number, f"image_path must be a string, got {image_path!r}")

    iou = obj.get("iou_score")
    if iou is not None:
        if isinstance(iou, bool) or not isinstance(iou, (int, float)):
            raise MalformedRecord(line_number, f"iou_score must be a number, got {iou!r}")
        iou = float(iou)
        if not (0.0 <= iou <= 1.0):
            raise MalformedRecord(line_number, f"iou_score {iou} outside [0, 1]")

    label = obj.get("label")
    if label is not None:
        label = _parse_label(label, line_number)

    return TripletRecord(
        id=rec_id,
        caption1=obj["caption1"],
        caption2=obj["caption2"],
        image_path=image_path,
        iou_score=iou,
        label=label,
    )


def _apply_adapter(obj: dict, adapter: str) -> dict:
    if adapter == "native":
        return obj
    mapped = {}
    for key, value in obj.items():
        mapped[CHALLENGE_FIELD_MAP.get(key, key)] = value
    return mapped


def load_dataset(path: str, adapter: str = "native") -> Dataset:
    """Parse every non-empty line into a record, aborting on the first bad line."""
    if adapter not in ADAPTERS:
        raise ValueError(f"unknown adapter {adapter!r}; expected one of {ADAPTERS}")

    records = []
    seen_ids: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_number, f"invalid record syntax: {exc.msg}") from exc
            obj = _apply_adapter(obj, adapter)
            rec = _record_from_obj(obj, line_number, fallback_id=f"rec-{line_number:06d}")
            if rec.id in seen_ids:
                raise MalformedRecord(
                    line_number, f"duplicate id {rec.id!r} (first seen on line {seen_ids[rec.id]})"
                )
            seen_ids[rec.id] = line_number
            records.append(rec)
    return Dataset(records=tuple(records), source_path=str(path))


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write a dataset back out in the native line-delimited format."""
    lines = []
    for r in dataset.records:
        obj = {"id": r.id, "image_path": r.image_path, "caption1": r.caption1, "caption2": r.caption2}
        if r.iou_score is not None:
            obj["iou_score"] = r.iou_score
        if r.label is not None:
            obj["label"] = r.label
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    from .util import atomic_write_text

    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def _shuffled_indices(n: int, seed: int) -> list[int]:
    # Seeded Fisher-Yates over record indices (random.shuffle is Fisher-Yates).
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    return indices


def split_train_test(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic seeded shuffle, then the first ceil(n * train_fraction) records train."""
    if len(dataset.labeled()) < 2:
        raise TooFewRecords(f"need >= 2 labeled records to split, have {len(dataset.labeled())}")

    records = dataset.records
    if spec.stratify:
        if any(r.label is None for r in records):
            raise ValueError("stratified split requires a fully labeled dataset")
        rng = random.Random(spec.seed)
        train_idx: list[int] = []
        test_idx: list[int] = []
        for label in (LABEL_NOOC, LABEL_OOC):
            group = [i for i, r in enumerate(records) if r.label == label]
            rng.shuffle(group)
            cut = math.ceil(len(group) * spec.train_fraction)
            train_idx.extend(group[:cut])
            test_idx.extend(group[cut:])
    else:
        order = _shuffled_indices(len(records), spec.seed)
        cut = math.ceil(len(records) * spec.train_fraction)
        train_idx, test_idx = order[:cut], order[cut:]

    train = Dataset(tuple(records[i] for i in train_idx), source_path=f"{dataset.source_path}#train")
    test = Dataset(tuple(records[i] for i in test_idx), source_path=f"{dataset.source_path}#test")
    return train, test


def fold_index_lists(n: int, k: int, seed: int) -> list[list[int]]:
    """k validation index lists partitioning range(n), sizes differing by at most 1."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    order = _shuffled_indices(n, seed)
    return [sorted(order[i::k]) for i in range(k)]


def make_cv_folds(dataset: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """k (train, validation) dataset pairs; validation sets partition the dataset."""
    if len(dataset.labeled()) < k:
        raise TooFewRecords(f"need >= {k} labeled records for {k}-fold CV, have {len(dataset.labeled())}")

    records = dataset.records
    folds = []
    for fold_no, val_idx in enumerate(fold_index_lists(len(records), k, seed)):
        val_set = set(val_idx)
        train = Dataset(
            tuple(records[i] for i in range(len(records)) if i not in val_set),
            source_path=f"{dataset.source_path}#fold{fold_no}-train",
        )
        val = Dataset(
            tuple(records[i] for i in val_idx),
            source_path=f"{dataset.source_path}#fold{fold_no}-val",
        )
        folds.append((train, val))
    return folds
