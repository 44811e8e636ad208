"""Run configuration: defaults < config file (YAML) < environment < flags.

The fully resolved config is echoed into every report and audit log so a run
can be reproduced from its outputs alone. API keys stay in the environment
(``OOCD_API_KEY``) and are never written anywhere.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError

ENV_PREFIX = "OOCD_"
ENV_OVERRIDES = {
    # env var (minus prefix) -> (section, key)
    "ENDPOINT": ("provider", "endpoint_url"),
    "MODEL_ID": ("provider", "model_id"),
    "CACHE_DIR": ("provider", "cache_dir"),
    "SIDECAR_ENDPOINT": ("similarity", "sidecar_endpoint"),
}


@dataclass
class ProviderSettings:
    kind: str = "stub"  # stub | live | fixture | adversarial
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_id: str = "gpt-3.5-turbo-0301"
    temperature: float = 0.0
    max_retries: int = 3
    requests_per_minute: int = 60
    timeout: float = 30.0
    replication_mode: bool = True
    failure_policy: str = "fail"
    concurrency: int = 1
    cache_dir: str = ".oocd-cache"
    stub_seed: int = 0
    fixture_path: str | None = None


@dataclass
class SimilaritySettings:
    source: str = "lexical"  # lexical | sidecar | precomputed
    sidecar_endpoint: str | None = None
    precomputed_path: str | None = None
    allow_mixed_sources: bool = False


@dataclass
class GateSettings:
    iou_threshold: float = 0.25


@dataclass
class SplitSettings:
    split_seed: int = 0
    train_fraction: float = 0.5
    stratify: bool = False
    k: int = 5


@dataclass
class ClassifierSettings:
    kind: str = "adaboost"  # adaboost | random_forest | linear_svm | all
    rounds: int = 50
    trees: int = 100
    max_depth: int = 4
    svm_lambda: float = 1e-3
    svm_epochs: int = 200


@dataclass
class RunConfig:
    seed: int = 0
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    similarity: SimilaritySettings = field(default_factory=SimilaritySettings)
    gate: GateSettings = field(default_factory=GateSettings)
    split: SplitSettings = field(default_factory=SplitSettings)
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)

    def snapshot(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "provider": ProviderSettings,
    "similarity": SimilaritySettings,
    "gate": GateSettings,
    "split": SplitSettings,
    "classifier": ClassifierSettings,
}


def _apply_section(settings, values: dict, section: str):
    known = {f.name for f in fields(settings)}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {section}.{key}")
        setattr(settings, key, value)


def load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return doc


def resolve_config(
    file_path: str | None = None,
    env: dict | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Merge config sources. ``overrides`` maps "section.key" (or "seed") to
    explicitly-set flag values; None values there mean "not given"."""
    config = RunConfig()
    env = os.environ if env is None else env

    if file_path is not None:
        doc = load_config_file(file_path)
        for section, values in doc.items():
            if section == "seed":
                config.seed = int(values)
                continue
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config section {section!r} must hold a mapping")
            _apply_section(getattr(config, section), values, section)

    for suffix, (section, key) in ENV_OVERRIDES.items():
        value = env.get(ENV_PREFIX + suffix)
        if value:
            setattr(getattr(config, section), key, value)

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if dotted == "seed":
            config.seed = value
            continue
        section, _, key = dotted.partition(".")
        if section not in _SECTIONS:
            raise ConfigError(f"unknown override {dotted!r}")
        _apply_section(getattr(config, section), {key: value}, section)

    return config
