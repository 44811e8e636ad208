"""End-to-end pipeline runs, accuracy protocol, cross-validation, reports.

Per record the gate goes first: a below-threshold coherence score predicts
NOOC outright with no caption-feature extraction. Everything else flows
through both feature extractors and the classifier. Reports carry a dataset
hash, the resolved config, and a per-record prediction dump from which every
reported accuracy is recomputable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .audit import AuditLog
from .cache import ResponseCache
from .dataset import Dataset, SplitSpec, fold_index_lists, split_train_test
from .errors import ExtractionFailed, MissingPredictions, ReportInconsistent
from .extraction import POLICY_FAIL, extract_for_records
from .features import FeatureRow, assemble_features, ensure_single_source, require_labeled
from .gate import GateConfig, GateDecision, gate_by_iou
from .model_io import predict_row
from .similarity import (
    SOURCE_LEXICAL,
    SOURCE_PRECOMPUTED,
    SOURCE_SIDECAR,
    PrecomputedSimilarityStore,
    fetch_similarity,
    lexical_similarity_fallback,
)

PATH_GATE = "gate"
PATH_CLASSIFIER = "classifier"

# Published comparison rows rendered alongside our results (test / full-set
# accuracy; the full set includes the training half, hence the column caveat).
@dataclass(frozen=True)
class MethodRow:
    method: str
    acc_test: float | None
    acc_full: float | None
    reference: bool = False


REFERENCE_ROWS = (
    MethodRow("cosmos-baseline", 0.839, 0.821, reference=True),
    MethodRow("nli-online-search", None, 0.891, reference=True),
    MethodRow("caption-ensemble", None, 0.867, reference=True),
    MethodRow("visual-semantic-reasoning", None, 0.760, reference=True),
)

FULL_COLUMN_CAVEAT = "includes training data"


@dataclass
class FeatureSources:
    """Everything the feature stage needs: provider, cache, similarity source."""

    provider: object
    cache: ResponseCache
    similarity_source: str = SOURCE_LEXICAL
    sidecar_endpoint: str | None = None
    precomputed: PrecomputedSimilarityStore | None = None
    failure_policy: str = POLICY_FAIL
    max_retries: int = 3
    concurrency: int = 1
    allow_mixed_sources: bool = False
    audit: AuditLog = field(default_factory=AuditLog)

    def similarity_for(self, record):
        if self.similarity_source == SOURCE_LEXICAL:
            return lexical_similarity_fallback(record.caption1, record.caption2)
        if self.similarity_source == SOURCE_SIDECAR:
            if not self.sidecar_endpoint:
                raise ValueError("sidecar similarity selected but no endpoint configured")
            return fetch_similarity(
                record.caption1,
                record.caption2,
                self.sidecar_endpoint,
                audit=self.audit,
                record_id=record.id,
            )
        if self.similarity_source == SOURCE_PRECOMPUTED:
            if self.precomputed is None:
                raise ValueError("precomputed similarity selected but no store loaded")
            vector = self.precomputed.get(record.id)
            if vector is None:
                raise ExtractionFailed(
                    record.id, KeyError(f"no precomputed similarity for {record.id!r}")
                )
            return vector
        raise ValueError(f"unknown similarity source {self.similarity_source!r}")


def gate_partition(dataset: Dataset, gate_config: GateConfig, audit: AuditLog | None = None):
    """Split records into gated (immediate NOOC) and proceed lists.

    Records without a coherence score proceed straight to caption analysis.
    """
    gated_ids: list[str] = []
    proceed = []
    for record in dataset:
        if record.iou_score is not None and gate_by_iou(record.iou_score, gate_config) is GateDecision.EARLY_NOOC:
            gated_ids.append(record.id)
            if audit is not None:
                audit.emit("gate_decision", record_id=record.id, decision="early_nooc",
                           iou=record.iou_score)
        else:
            proceed.append(record)
            if audit is not None:
                audit.emit("gate_decision", record_id=record.id, decision="proceed",
                           iou=record.iou_score)
    return gated_ids, proceed


def build_rows(records, sources: FeatureSources) -> dict[str, FeatureRow]:
    """Extract provider and similarity features and assemble classifier rows."""
    extractions = extract_for_records(
        records,
        sources.provider,
        sources.cache,
        concurrency=sources.concurrency,
        max_retries=sources.max_retries,
        failure_policy=sources.failure_policy,
        audit=sources.audit,
    )
    rows: dict[str, FeatureRow] = {}
    for record in records:
        result = extractions[record.id]
        sim = sources.similarity_for(record)
        rows[record.id] = assemble_features(
            sim, result.vector, record.id, label=record.label, imputed=result.imputed
        )
    return rows


@dataclass(frozen=True)
class PipelineResult:
    order: tuple[str, ...]
    predictions: dict[str, int]
    margins: dict[str, float | None]
    provenance: dict[str, dict]
    rows: dict[str, FeatureRow]


def run_pipeline(dataset: Dataset, gate_config: GateConfig, sources: FeatureSources,
                 model, *, zero_margin_label: int = 1) -> PipelineResult:
    gated_ids, proceed = gate_partition(dataset, gate_config, sources.audit)
    rows = build_rows(proceed, sources)

    predictions: dict[str, int] = {}
    margins: dict[str, float | None] = {}
    provenance: dict[str, dict] = {}
    for record_id in gated_ids:
        predictions[record_id] = 0
        margins[record_id] = None
        provenance[record_id] = {"path": PATH_GATE}
    for record in proceed:
        row = rows[record.id]
        label, margin = predict_row(model, row, zero_margin_label=zero_margin_label)
        predictions[record.id] = label
        margins[record.id] = margin
        provenance[record.id] = {
            "path": PATH_CLASSIFIER,
            "sim_source": row.sim_source,
            "imputed": row.imputed,
        }
    return PipelineResult(
        order=tuple(r.id for r in dataset),
        predictions=predictions,
        margins=margins,
        provenance=provenance,
        rows=rows,
    )


def evaluate_accuracy(predictions: dict[str, int], labels: dict[str, int]) -> float:
    """(# correct) / (# labeled); every labeled record must have a prediction."""
    missing = [record_id for record_id in labels if record_id not in predictions]
    if missing:
        raise MissingPredictions(missing)
    if not labels:
        raise MissingPredictions(["<empty label set>"])
    correct = sum(1 for record_id, label in labels.items() if predictions[record_id] == label)
    return correct / len(labels)


@dataclass(frozen=True)
class CvResult:
    fold_accuracies: tuple[float, ...]
    mean: float
    std: float


def train_classifier(rows: list[FeatureRow], kind: str, seed: int = 0, **params):
    """Dispatch to the from-scratch trainers by kind name."""
    from .adaboost import train_adaboost
    from .forest import train_random_forest
    from .svm import train_linear_svm

    if kind == "adaboost":
        return train_adaboost(rows, rounds=params.get("rounds", 50))
    if kind == "random_forest":
        return train_random_forest(
            rows,
            trees=params.get("trees", 100),
            max_depth=params.get("max_depth", 4),
            seed=seed,
        )
    if kind == "linear_svm":
        return train_linear_svm(
            rows,
            lambda_=params.get("svm_lambda", 1e-3),
            epochs=params.get("svm_epochs", 200),
            seed=seed,
        )
    raise ValueError(f"unknown classifier kind {kind!r}")


def cross_validate(rows: list[FeatureRow], k: int = 5, *, classifier: str = "adaboost",
                   seed: int = 0, **params) -> CvResult:
    rows = require_labeled(rows)
    accuracies = []
    for val_idx in fold_index_lists(len(rows), k, seed):
        val_set = set(val_idx)
        train_rows = [rows[i] for i in range(len(rows)) if i not in val_set]
        val_rows = [rows[i] for i in val_idx]
        model = train_classifier(train_rows, classifier, seed=seed, **params)
        predictions = {r.record_id: predict_row(model, r)[0] for r in val_rows}
        labels = {r.record_id: r.label for r in val_rows}
        accuracies.append(evaluate_accuracy(predictions, labels))
    mean = sum(accuracies) / len(accuracies)
    std = math.sqrt(sum((a - mean) ** 2 for a in accuracies) / len(accuracies))
    return CvResult(tuple(accuracies), mean, std)


def generate_synthetic(n: int, separation: float, seed: int) -> list[FeatureRow]:
    """Desk-scale labeled rows: OOC rows get high ratings and low similarity,
    NOOC rows the opposite; ``separation`` scales the class-mean gap (0 means
    the class distributions coincide)."""
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    if not (0.0 <= separation <= 1.0):
        raise ValueError(f"separation must lie in [0, 1], got {separation}")
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        label = i % 2
        sign = 1.0 if label == 1 else -1.0
        c_mean = 4.5 + sign * 3.0 * separation
        s_mean = 0.5 - sign * 0.3 * separation
        ratings = np.clip(np.rint(rng.normal(c_mean, 1.2, size=6)), 0, 9)
        sims = np.clip(rng.normal(s_mean, 0.12, size=2), 0.0, 1.0)
        rows.append(
            FeatureRow(
                record_id=f"syn-{i:05d}",
                features=(float(sims[0]), float(sims[1]), *(float(c) for c in ratings)),
                label=label,
            )
        )
    return rows


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[MethodRow, ...]
    dataset_hash: str
    seed: int
    config: dict
    dump_path: str | None = None

    def selected_method(self) -> str | None:
        """Model selection: highest test-split accuracy among our own rows."""
        candidates = [r for r in self.rows if not r.reference and r.acc_test is not None]
        if not candidates:
            return None
        return max(candidates, key=lambda r: r.acc_test).method

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "dataset_hash": self.dataset_hash,
            "seed": self.seed,
            "config": self.config,
            "dump_path": self.dump_path,
            "full_column_note": FULL_COLUMN_CAVEAT,
            "selected_method": self.selected_method(),
            "rows": [
                {
                    "method": r.method,
                    "acc_test": r.acc_test,
                    "acc_full": r.acc_full,
                    "reference": r.reference,
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        return cls(
            rows=tuple(
                MethodRow(r["method"], r["acc_test"], r["acc_full"], r.get("reference", False))
                for r in doc["rows"]
            ),
            dataset_hash=doc["dataset_hash"],
            seed=doc["seed"],
            config=doc.get("config", {}),
            dump_path=doc.get("dump_path"),
        )


def dataset_hash(dataset: Dataset) -> str:
    if dataset.source_path and os.path.isfile(dataset.source_path):
        with open(dataset.source_path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    payload = json.dumps(
        [
            {
                "id": r.id,
                "caption1": r.caption1,
                "caption2": r.caption2,
                "iou_score": r.iou_score,
                "label": r.label,
            }
            for r in dataset
        ],
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def render_report(report: EvalReport, fmt: str = "table-text") -> str:
    """Deterministic rendering; markdown emphasizes the best value per column."""
    rows = report.rows
    if fmt == "csv":
        lines = ["method,acc_test,acc_full"]
        lines.extend(f"{r.method},{_fmt(r.acc_test)},{_fmt(r.acc_full)}" for r in rows)
        return "\n".join(lines) + "\n"

    full_header = f"acc_full ({FULL_COLUMN_CAVEAT})"
    if fmt == "table-text":
        header = ("method", "acc_test", full_header)
        cells = [(r.method, _fmt(r.acc_test) or "-", _fmt(r.acc_full) or "-") for r in rows]
        widths = [max(len(header[c]), *(len(row[c]) for row in cells)) for c in range(3)]
        lines = ["  ".join(header[c].ljust(widths[c]) for c in range(3)).rstrip()]
        lines.append("  ".join("-" * widths[c] for c in range(3)))
        lines.extend("  ".join(row[c].ljust(widths[c]) for c in range(3)).rstrip() for row in cells)
        return "\n".join(lines) + "\n"

    if fmt == "markdown":
        best_test = max((r.acc_test for r in rows if r.acc_test is not None), default=None)
        best_full = max((r.acc_full for r in rows if r.acc_full is not None), default=None)

        def cell(value: float | None, best: float | None) -> str:
            if value is None:
                return "-"
            text = f"{value:.3f}"
            return f"**{text}**" if best is not None and value == best else text

        lines = [
            f"| Method | Acc. (test) | Acc. (full, {FULL_COLUMN_CAVEAT}) |",
            "| --- | --- | --- |",
        ]
        lines.extend(
            f"| {r.method} | {cell(r.acc_test, best_test)} | {cell(r.acc_full, best_full)} |"
            for r in rows
        )
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown report format {fmt!r} (expected table-text, csv, or markdown)")


def recompute_from_dump(dump_path: str) -> dict[str, dict[str, float | None]]:
    """Per-method accuracies recomputed from a prediction dump file."""
    by_method: dict[str, list[dict]] = {}
    with open(dump_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            by_method.setdefault(obj["method"], []).append(obj)
    out: dict[str, dict[str, float | None]] = {}
    for method, items in by_method.items():
        test = {o["id"]: o["label"] for o in items if o["label"] is not None and o["split"] == "test"}
        full = {o["id"]: o["label"] for o in items if o["label"] is not None}
        preds = {o["id"]: o["prediction"] for o in items}
        out[method] = {
            "acc_test": evaluate_accuracy(preds, test) if test else None,
            "acc_full": evaluate_accuracy(preds, full) if full else None,
        }
    return out


def check_report_consistency(report: EvalReport) -> None:
    """Every non-reference accuracy must equal recomputation from the dump."""
    if report.dump_path is None:
        return
    recomputed = recompute_from_dump(report.dump_path)
    for row in report.rows:
        if row.reference:
            continue
        got = recomputed.get(row.method)
        if got is None:
            raise ReportInconsistent(f"dump has no predictions for method {row.method!r}")
        for name, reported in (("acc_test", row.acc_test), ("acc_full", row.acc_full)):
            if reported is not None and got[name] != reported:
                raise ReportInconsistent(
                    f"{row.method} {name}: reported {reported!r} != recomputed {got[name]!r}"
                )


def evaluate_end_to_end(
    dataset: Dataset,
    split_spec: SplitSpec,
    gate_config: GateConfig,
    sources: FeatureSources,
    classifiers: list[str],
    *,
    seed: int = 0,
    dump_path: str | None = None,
    config_snapshot: dict | None = None,
    classifier_params: dict | None = None,
    include_reference_rows: bool = True,
) -> EvalReport:
    """Split, extract once, train each classifier on its train half, report.

    Gated records are predicted NOOC for every method; classifiers train on
    the train-split records that passed the gate.
    """
    classifier_params = classifier_params or {}
    train_ds, test_ds = split_train_test(dataset, split_spec)
    train_ids = {r.id for r in train_ds}
    test_labels = test_ds.labels_by_id()
    full_labels = dataset.labels_by_id()

    gated_ids, proceed = gate_partition(dataset, gate_config, sources.audit)
    rows = build_rows(proceed, sources)
    train_rows = [rows[r.id] for r in train_ds if r.id in rows and r.label is not None]
    ensure_single_source(train_rows, allow_mixed=sources.allow_mixed_sources)

    dump_lines: list[str] = []
    method_rows: list[MethodRow] = []
    splits = {r.id: ("train" if r.id in train_ids else "test") for r in dataset}

    for kind in classifiers:
        model = train_classifier(train_rows, kind, seed=seed, **classifier_params)
        predictions: dict[str, int] = {rid: 0 for rid in gated_ids}
        margins: dict[str, float | None] = {rid: None for rid in gated_ids}
        for record in proceed:
            label, margin = predict_row(model, rows[record.id])
            predictions[record.id] = label
            margins[record.id] = margin
        acc_test = evaluate_accuracy(predictions, test_labels)
        acc_full = evaluate_accuracy(predictions, full_labels)
        method_rows.append(MethodRow(kind, acc_test, acc_full))
        gated = set(gated_ids)
        for record in dataset:
            row = rows.get(record.id)
            dump_lines.append(
                json.dumps(
                    {
                        "method": kind,
                        "id": record.id,
                        "split": splits[record.id],
                        "label": record.label,
                        "prediction": predictions[record.id],
                        "margin": margins[record.id],
                        "path": PATH_GATE if record.id in gated else PATH_CLASSIFIER,
                        "imputed": bool(row.imputed) if row is not None else False,
                        "sim_source": row.sim_source if row is not None else None,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )

    if dump_path is not None:
        from .util import atomic_write_text

        atomic_write_text(dump_path, "\n".join(dump_lines) + "\n")

    all_rows = tuple(method_rows) + (REFERENCE_ROWS if include_reference_rows else ())
    report = EvalReport(
        rows=all_rows,
        dataset_hash=dataset_hash(dataset),
        seed=seed,
        config=config_snapshot or {},
        dump_path=dump_path,
    )
    check_report_consistency(report)
    return report


def save_report(report: EvalReport, path: str) -> None:
    from .util import atomic_write_text

    atomic_write_text(path, json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")


def load_report(path: str) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))
