"""Command-line entry point: extract-features, train, predict, evaluate,
cross-validate, report."""

from __future__ import annotations

import functools
import json
import sys

import click

from .audit import AuditLog
from .cache import ResponseCache
from .config import RunConfig, resolve_config
from .dataset import SplitSpec, load_dataset
from .errors import OocdError
from .extraction import FAILURE_POLICIES
from .features import ensure_single_source, read_feature_rows, require_labeled, write_feature_rows
from .gate import GateConfig
from .harness import (
    FeatureSources,
    build_rows,
    cross_validate,
    evaluate_end_to_end,
    gate_partition,
    load_report,
    render_report,
    save_report,
    train_classifier,
)
from .model_io import load_model, predict_row, save_model
from .providers import (
    AdversarialStubProvider,
    FixtureChatProvider,
    LiveChatProvider,
    ProviderConfig,
    StubChatProvider,
)
from .similarity import PrecomputedSimilarityStore
from .util import atomic_write_text

CLASSIFIER_ALIASES = {
    "adaboost": "adaboost",
    "rf": "random_forest",
    "random_forest": "random_forest",
    "svm": "linear_svm",
    "linear_svm": "linear_svm",
}
ALL_CLASSIFIERS = ("adaboost", "random_forest", "linear_svm")


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OocdError, FileNotFoundError, ValueError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _build_provider(config: RunConfig):
    p = config.provider
    if p.kind == "stub":
        return StubChatProvider(seed=p.stub_seed if p.stub_seed is not None else config.seed)
    if p.kind == "adversarial":
        return AdversarialStubProvider(seed=p.stub_seed if p.stub_seed is not None else config.seed)
    if p.kind == "fixture":
        if not p.fixture_path:
            raise click.ClickException("--provider fixture needs --fixture <path>")
        return FixtureChatProvider.from_file(p.fixture_path)
    if p.kind == "live":
        provider_config = ProviderConfig(
            endpoint_url=p.endpoint_url,
            model_id=p.model_id,
            temperature=p.temperature,
            max_retries=p.max_retries,
            requests_per_minute=p.requests_per_minute,
            timeout=p.timeout,
            replication_mode=p.replication_mode,
        )
        return LiveChatProvider(provider_config)
    raise click.ClickException(f"unknown provider kind {p.kind!r}")


def _build_sources(config: RunConfig, audit: AuditLog) -> FeatureSources:
    audit.emit("run_config", config=config.snapshot())  # reproducibility record
    sim = config.similarity
    precomputed = None
    if sim.source == "precomputed":
        if not sim.precomputed_path:
            raise click.ClickException("--similarity-source precomputed needs --precomputed <path>")
        precomputed = PrecomputedSimilarityStore.load(sim.precomputed_path)
    return FeatureSources(
        provider=_build_provider(config),
        cache=ResponseCache(config.provider.cache_dir),
        similarity_source=sim.source,
        sidecar_endpoint=sim.sidecar_endpoint,
        precomputed=precomputed,
        failure_policy=config.provider.failure_policy,
        max_retries=config.provider.max_retries,
        concurrency=config.provider.concurrency,
        allow_mixed_sources=sim.allow_mixed_sources,
        audit=audit,
    )


def _resolve(config_path, overrides) -> RunConfig:
    return resolve_config(config_path, None, overrides)


def _common_extraction_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="YAML config file (flags win over it)."),
        click.option("--seed", type=int, default=None, help="Global seed."),
        click.option("--provider", "provider_kind",
                     type=click.Choice(["live", "stub", "fixture", "adversarial"]), default=None),
        click.option("--stub-seed", type=int, default=None),
        click.option("--fixture", "fixture_path", type=click.Path(exists=True), default=None),
        click.option("--cache-dir", type=click.Path(), default=None),
        click.option("--concurrency", type=int, default=None),
        click.option("--failure-policy", type=click.Choice(list(FAILURE_POLICIES)), default=None),
        click.option("--iou-threshold", type=float, default=None,
                     help="Coherence gate threshold (default 0.25)."),
        click.option("--similarity-source",
                     type=click.Choice(["sidecar", "precomputed", "lexical"]), default=None),
        click.option("--sidecar-endpoint", default=None),
        click.option("--precomputed", "precomputed_path", type=click.Path(exists=True), default=None),
        click.option("--allow-mixed-sources", is_flag=True, default=None),
        click.option("--audit-log", type=click.Path(), default=None),
        click.option("--adapter", type=click.Choice(["native", "challenge"]), default="native"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config_from_flags(config_path, seed, provider_kind, stub_seed, fixture_path, cache_dir,
                       concurrency, failure_policy, iou_threshold, similarity_source,
                       sidecar_endpoint, precomputed_path, allow_mixed_sources) -> RunConfig:
    overrides = {
        "seed": seed,
        "provider.kind": provider_kind,
        "provider.stub_seed": stub_seed,
        "provider.fixture_path": fixture_path,
        "provider.cache_dir": cache_dir,
        "provider.concurrency": concurrency,
        "provider.failure_policy": failure_policy,
        "gate.iou_threshold": iou_threshold,
        "similarity.source": similarity_source,
        "similarity.sidecar_endpoint": sidecar_endpoint,
        "similarity.precomputed_path": precomputed_path,
        "similarity.allow_mixed_sources": allow_mixed_sources,
    }
    return _resolve(config_path, overrides)


@click.group()
@click.version_option(package_name="oocd")
def main():
    """Out-of-context caption-pair detection pipeline."""


@main.command("extract-features")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Feature rows (JSONL) for records that pass the gate.")
@_common_extraction_options
@_handle_errors
def extract_features_cmd(dataset_path, out_path, config_path, seed, provider_kind, stub_seed,
                         fixture_path, cache_dir, concurrency, failure_policy, iou_threshold,
                         similarity_source, sidecar_endpoint, precomputed_path,
                         allow_mixed_sources, audit_log, adapter):
    """Extract the 8-dim feature rows for a dataset."""
    config = _config_from_flags(config_path, seed, provider_kind, stub_seed, fixture_path,
                                cache_dir, concurrency, failure_policy, iou_threshold,
                                similarity_source, sidecar_endpoint, precomputed_path,
                                allow_mixed_sources)
    dataset = load_dataset(dataset_path, adapter=adapter)
    with AuditLog(audit_log) as audit:
        sources = _build_sources(config, audit)
        gated_ids, proceed = gate_partition(dataset, GateConfig(config.gate.iou_threshold), audit)
        rows = build_rows(proceed, sources)
    write_feature_rows([rows[r.id] for r in proceed], out_path)
    click.echo(f"wrote {len(rows)} feature rows to {out_path} "
               f"({len(gated_ids)} records gated to NOOC, no features extracted)")


@main.command("train")
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIER_ALIASES)), default="adaboost")
@click.option("--rounds", type=int, default=50, help="Boosting rounds (adaboost).")
@click.option("--trees", type=int, default=100, help="Trees (random forest).")
@click.option("--max-depth", type=int, default=4, help="Tree depth limit (random forest).")
@click.option("--svm-lambda", type=float, default=1e-3)
@click.option("--svm-epochs", type=int, default=200)
@click.option("--seed", type=int, default=0)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--allow-mixed-sources", is_flag=True, default=False)
@_handle_errors
def train_cmd(classifier, rounds, trees, max_depth, svm_lambda, svm_epochs, seed,
              in_path, out_path, allow_mixed_sources):
    """Train a classifier on a feature-row file."""
    rows = require_labeled(read_feature_rows(in_path))
    ensure_single_source(rows, allow_mixed=allow_mixed_sources)
    kind = CLASSIFIER_ALIASES[classifier]
    model = train_classifier(rows, kind, seed=seed, rounds=rounds, trees=trees,
                             max_depth=max_depth, svm_lambda=svm_lambda, svm_epochs=svm_epochs)
    save_model(model, out_path)
    click.echo(f"trained {kind} on {len(rows)} rows -> {out_path}")


@main.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_handle_errors
def predict_cmd(model_path, in_path, out_path):
    """Predict labels for a feature-row file."""
    model = load_model(model_path)
    rows = read_feature_rows(in_path)
    lines = []
    for row in rows:
        label, margin = predict_row(model, row)
        lines.append(json.dumps(
            {"id": row.record_id, "prediction": label, "margin": margin},
            ensure_ascii=False, sort_keys=True,
        ))
    atomic_write_text(out_path, "\n".join(lines) + "\n")
    click.echo(f"wrote {len(lines)} predictions to {out_path}")


@main.command("evaluate")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--split-seed", type=int, default=None,
              help="Train/test split seed (defaults to --seed).")
@click.option("--train-fraction", type=float, default=None)
@click.option("--stratify", is_flag=True, default=None)
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIER_ALIASES) + ["all"]),
              default="all")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Write the report JSON here.")
@click.option("--dump", "dump_path", type=click.Path(), default=None,
              help="Write the per-record prediction dump here.")
@click.option("--format", "fmt", type=click.Choice(["table-text", "csv", "markdown"]),
              default="table-text")
@_common_extraction_options
@_handle_errors
def evaluate_cmd(dataset_path, split_seed, train_fraction, stratify, classifier, report_path,
                 dump_path, fmt, config_path, seed, provider_kind, stub_seed, fixture_path,
                 cache_dir, concurrency, failure_policy, iou_threshold, similarity_source,
                 sidecar_endpoint, precomputed_path, allow_mixed_sources, audit_log, adapter):
    """Split, extract, train, and report accuracies with reference rows."""
    config = _config_from_flags(config_path, seed, provider_kind, stub_seed, fixture_path,
                                cache_dir, concurrency, failure_policy, iou_threshold,
                                similarity_source, sidecar_endpoint, precomputed_path,
                                allow_mixed_sources)
    if split_seed is not None:
        config.split.split_seed = split_seed
    elif seed is not None:
        config.split.split_seed = seed
    if train_fraction is not None:
        config.split.train_fraction = train_fraction
    if stratify is not None:
        config.split.stratify = stratify

    kinds = list(ALL_CLASSIFIERS) if classifier == "all" else [CLASSIFIER_ALIASES[classifier]]
    dataset = load_dataset(dataset_path, adapter=adapter)
    with AuditLog(audit_log) as audit:
        sources = _build_sources(config, audit)
        report = evaluate_end_to_end(
            dataset,
            SplitSpec(config.split.split_seed, config.split.train_fraction, config.split.stratify),
            GateConfig(config.gate.iou_threshold),
            sources,
            kinds,
            seed=config.seed,
            dump_path=dump_path,
            config_snapshot=config.snapshot(),
            classifier_params={
                "rounds": config.classifier.rounds,
                "trees": config.classifier.trees,
                "max_depth": config.classifier.max_depth,
                "svm_lambda": config.classifier.svm_lambda,
                "svm_epochs": config.classifier.svm_epochs,
            },
        )
    if report_path:
        save_report(report, report_path)
    click.echo(render_report(report, fmt), nl=False)


@main.command("cross-validate")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), default=None)
@click.option("--features", "features_path", type=click.Path(exists=True), default=None,
              help="Skip extraction and cross-validate a feature-row file.")
@click.option("--k", type=int, default=5)
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIER_ALIASES)), default="adaboost")
@click.option("--rounds", type=int, default=50)
@click.option("--trees", type=int, default=100)
@click.option("--max-depth", type=int, default=4)
@_common_extraction_options
@_handle_errors
def cross_validate_cmd(dataset_path, features_path, k, classifier, rounds, trees, max_depth,
                       config_path, seed, provider_kind, stub_seed, fixture_path, cache_dir,
                       concurrency, failure_policy, iou_threshold, similarity_source,
                       sidecar_endpoint, precomputed_path, allow_mixed_sources, audit_log,
                       adapter):
    """K-fold cross-validation over extracted feature rows."""
    if (dataset_path is None) == (features_path is None):
        raise click.UsageError("give exactly one of --dataset or --features")
    config = _config_from_flags(config_path, seed, provider_kind, stub_seed, fixture_path,
                                cache_dir, concurrency, failure_policy, iou_threshold,
                                similarity_source, sidecar_endpoint, precomputed_path,
                                allow_mixed_sources)
    if features_path is not None:
        rows = [r for r in read_feature_rows(features_path) if r.label is not None]
    else:
        dataset = load_dataset(dataset_path, adapter=adapter)
        with AuditLog(audit_log) as audit:
            sources = _build_sources(config, audit)
            _, proceed = gate_partition(dataset, GateConfig(config.gate.iou_threshold), audit)
            built = build_rows([r for r in proceed if r.label is not None], sources)
        rows = [built[r.id] for r in proceed if r.id in built]
    ensure_single_source(rows, allow_mixed=config.similarity.allow_mixed_sources)
    kind = CLASSIFIER_ALIASES[classifier]
    result = cross_validate(rows, k, classifier=kind, seed=config.seed,
                            rounds=rounds, trees=trees, max_depth=max_depth)
    for i, acc in enumerate(result.fold_accuracies):
        click.echo(f"fold {i}: {acc:.3f}")
    click.echo(f"mean {result.mean:.3f} +- {result.std:.3f} ({kind}, k={k})")


@main.command("report")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True,
              help="Report JSON produced by evaluate.")
@click.option("--format", "fmt", type=click.Choice(["table-text", "csv", "markdown"]),
              default="table-text")
@click.option("--out", "out_path", type=click.Path(), default=None)
@_handle_errors
def report_cmd(in_path, fmt, out_path):
    """Render a saved evaluation report."""
    rendered = render_report(load_report(in_path), fmt)
    if out_path:
        atomic_write_text(out_path, rendered)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(rendered, nl=False)


if __name__ == "__main__":
    sys.exit(main())
