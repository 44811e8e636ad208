import json

import pytest

from oocd.features import FeatureRow


def write_jsonl(path, objs):
    path.write_text("\n".join(json.dumps(o) for o in objs) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def dataset_file(tmp_path):
    """Writes records to a JSONL file and returns its path."""

    def _write(objs, name="data.jsonl"):
        return write_jsonl(tmp_path / name, objs)

    return _write


def make_record(i, *, iou=0.9, label=0, caption1=None, caption2=None):
    return {
        "id": f"rec-{i:04d}",
        "image_path": f"img/{i}.jpg",
        "caption1": caption1 or f"caption one number {i}",
        "caption2": caption2 or f"caption two number {i}",
        "iou_score": iou,
        "label": label,
    }


GENERIC_ORDER = ("f0", "f1", "f2", "f3", "f4", "f5", "f6", "f7")


def generic_row(record_id, features, label=None):
    """Row over arbitrary real features (bypasses the domain bounds that the
    canonical order enforces)."""
    features = tuple(float(v) for v in features)
    order = tuple(f"f{i}" for i in range(len(features)))
    return FeatureRow(record_id, features, label=label, feature_order=order)


def one_feature_rows(xs, labels):
    """1-D dataset embedded as single-feature rows (labels are 0/1)."""
    return [generic_row(f"r{i}", (x,), label) for i, (x, label) in enumerate(zip(xs, labels))]
