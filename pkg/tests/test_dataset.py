import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_record
from oocd.dataset import (
    Dataset,
    SplitSpec,
    TripletRecord,
    fold_index_lists,
    load_dataset,
    make_cv_folds,
    split_train_test,
)
from oocd.errors import MalformedRecord, TooFewRecords


def test_load_two_valid_lines_in_order(dataset_file):
    path = dataset_file([make_record(1), make_record(2)])
    ds = load_dataset(path)
    assert len(ds) == 2
    assert [r.id for r in ds] == ["rec-0001", "rec-0002"]
    assert ds.records[0].caption1 == "caption one number 1"
    assert ds.records[0].iou_score == 0.9
    assert ds.records[0].label == 0


def test_missing_caption2_aborts_with_line_number(dataset_file):
    rec = make_record(1)
    del rec["caption2"]
    path = dataset_file([make_record(0), rec])
    with pytest.raises(MalformedRecord) as exc:
        load_dataset(path)
    assert exc.value.line_number == 2
    assert "caption2" in exc.value.reason


def test_empty_file_is_a_valid_empty_dataset(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_dataset(str(path))) == 0


def test_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "gaps.jsonl"
    path.write_text(
        json.dumps(make_record(1)) + "\n\n" + json.dumps(make_record(2)) + "\n",
        encoding="utf-8",
    )
    assert len(load_dataset(str(path))) == 2


def test_missing_file_raises_filenotfound():
    with pytest.raises(FileNotFoundError):
        load_dataset("/nonexistent/nowhere.jsonl")


@pytest.mark.parametrize(
    "mutation, fragment",
    [
        (lambda r: r.update(iou_score=1.5), "outside"),
        (lambda r: r.update(iou_score="high"), "number"),
        (lambda r: r.update(label=2), "label"),
        (lambda r: r.update(label="maybe"), "label"),
        (lambda r: r.update(caption1="   "), "caption1"),
        (lambda r: r.update(id=""), "id"),
    ],
)
def test_invalid_fields_abort_the_load(dataset_file, mutation, fragment):
    rec = make_record(1)
    mutation(rec)
    path = dataset_file([rec])
    with pytest.raises(MalformedRecord) as exc:
        load_dataset(path)
    assert fragment in exc.value.reason


def test_invalid_json_line_reports_syntax(dataset_file, tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(make_record(1)) + "\nnot-json\n", encoding="utf-8")
    with pytest.raises(MalformedRecord) as exc:
        load_dataset(str(path))
    assert exc.value.line_number == 2
    assert "syntax" in exc.value.reason


def test_duplicate_ids_abort(dataset_file):
    path = dataset_file([make_record(1), make_record(1)])
    with pytest.raises(MalformedRecord) as exc:
        load_dataset(path)
    assert "duplicate" in exc.value.reason


def test_string_labels_and_unknown_keys(dataset_file):
    recs = [make_record(1), make_record(2)]
    recs[0]["label"] = "OOC"
    recs[1]["label"] = "NOOC"
    recs[1]["mystery_key"] = {"nested": True}
    ds = load_dataset(dataset_file(recs))
    assert ds.records[0].label == 1
    assert ds.records[1].label == 0


def test_optional_fields_may_be_absent(dataset_file):
    rec = {"id": "a", "caption1": "one caption", "caption2": "two caption"}
    ds = load_dataset(dataset_file([rec]))
    assert ds.records[0].iou_score is None
    assert ds.records[0].label is None
    assert ds.records[0].image_path == ""


def test_challenge_adapter_maps_field_names(dataset_file):
    rec = {
        "img_local_path": "images/42.jpg",
        "caption1": "first caption text",
        "caption2": "second caption text",
        "context_label": 1,
    }
    ds = load_dataset(dataset_file([rec]), adapter="challenge")
    assert ds.records[0].image_path == "images/42.jpg"
    assert ds.records[0].label == 1
    assert ds.records[0].id == "rec-000001"  # synthesized from the line number


def test_reload_yields_identical_dataset(dataset_file):
    path = dataset_file([make_record(i, label=i % 2) for i in range(10)])
    first, second = load_dataset(path), load_dataset(path)
    assert first.records == second.records


def test_split_1000_records_is_500_500(dataset_file):
    path = dataset_file([make_record(i, label=i % 2) for i in range(1000)])
    ds = load_dataset(path)
    train, test = split_train_test(ds, SplitSpec(seed=7))
    assert (len(train), len(test)) == (500, 500)


def test_split_same_seed_is_identical():
    ds = Dataset(tuple(
        TripletRecord(f"r{i}", f"first {i}", f"second {i}", label=i % 2) for i in range(30)
    ))
    a = split_train_test(ds, SplitSpec(seed=3))
    b = split_train_test(ds, SplitSpec(seed=3))
    assert a[0].records == b[0].records
    assert a[1].records == b[1].records


def test_split_three_records_ceils_to_two_train():
    ds = Dataset(tuple(
        TripletRecord(f"r{i}", f"first {i}", f"second {i}", label=i % 2) for i in range(3)
    ))
    train, test = split_train_test(ds, SplitSpec(seed=0))
    assert (len(train), len(test)) == (2, 1)


def test_split_partitions_without_overlap():
    ds = Dataset(tuple(
        TripletRecord(f"r{i}", f"first {i}", f"second {i}", label=i % 2) for i in range(41)
    ))
    train, test = split_train_test(ds, SplitSpec(seed=11, train_fraction=0.3))
    train_ids = {r.id for r in train}
    test_ids = {r.id for r in test}
    assert not (train_ids & test_ids)
    assert train_ids | test_ids == {r.id for r in ds}


def test_split_stratified_keeps_class_ratio():
    ds = Dataset(tuple(
        TripletRecord(f"r{i}", f"first {i}", f"second {i}", label=1 if i < 10 else 0)
        for i in range(40)
    ))
    train, _ = split_train_test(ds, SplitSpec(seed=2, stratify=True))
    assert sum(1 for r in train if r.label == 1) == 5
    assert sum(1 for r in train if r.label == 0) == 15


def test_split_rejects_too_few_labeled():
    ds = Dataset((
        TripletRecord("a", "first text", "second text", label=1),
        TripletRecord("b", "first text", "second text"),
    ))
    with pytest.raises(TooFewRecords):
        split_train_test(ds, SplitSpec(seed=0))


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.7])
def test_split_spec_rejects_bad_fraction(fraction):
    with pytest.raises(ValueError):
        SplitSpec(seed=0, train_fraction=fraction)


def _labeled_dataset(n):
    return Dataset(tuple(
        TripletRecord(f"r{i}", f"first {i}", f"second {i}", label=i % 2) for i in range(n)
    ))


def test_folds_ten_records_five_folds():
    folds = make_cv_folds(_labeled_dataset(10), k=5, seed=0)
    sizes = [len(val) for _, val in folds]
    assert sizes == [2, 2, 2, 2, 2]
    seen = set()
    for _, val in folds:
        ids = {r.id for r in val}
        assert not (ids & seen)
        seen |= ids
    assert seen == {f"r{i}" for i in range(10)}


def test_folds_eleven_records_sizes_differ_by_one():
    folds = make_cv_folds(_labeled_dataset(11), k=5, seed=0)
    assert sorted(len(val) for _, val in folds) == [2, 2, 2, 2, 3]


def test_folds_on_thousand_record_corpus(dataset_file):
    path = dataset_file([make_record(i, label=i % 2) for i in range(1000)])
    folds = make_cv_folds(load_dataset(path), k=5, seed=1)
    assert [len(val) for _, val in folds] == [200] * 5


def test_folds_train_is_complement():
    ds = _labeled_dataset(17)
    for train, val in make_cv_folds(ds, k=4, seed=9):
        assert {r.id for r in train} | {r.id for r in val} == {r.id for r in ds}
        assert not ({r.id for r in train} & {r.id for r in val})


def test_folds_deterministic():
    ds = _labeled_dataset(23)
    a = make_cv_folds(ds, k=5, seed=4)
    b = make_cv_folds(ds, k=5, seed=4)
    assert [(t.records, v.records) for t, v in a] == [(t.records, v.records) for t, v in b]


def test_folds_reject_k_above_labeled_count():
    with pytest.raises(TooFewRecords):
        make_cv_folds(_labeled_dataset(4), k=5, seed=0)


@given(
    n=st.integers(min_value=2, max_value=200),
    k=st.integers(min_value=2, max_value=10),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_fold_indices_partition_property(n, k, seed):
    if k > n:
        k = n
    folds = fold_index_lists(n, k, seed)
    assert len(folds) == k
    flat = sorted(i for fold in folds for i in fold)
    assert flat == list(range(n))
    sizes = [len(fold) for fold in folds]
    assert max(sizes) - min(sizes) <= 1
